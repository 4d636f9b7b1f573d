package com.shop.model;

public final class AppLimits {
    public static final int MAX_ITEMS = 100;
    public static final int MAX_USERS = 5000;

    private AppLimits() {
    }

    public static boolean withinItemLimit(int items) {
        return items <= MAX_ITEMS;
    }
}
