package com.shop.model;

public record Version(int major, int minor) {
    public boolean isNewerThan(int otherMajor) {
        return major > otherMajor;
    }
}
