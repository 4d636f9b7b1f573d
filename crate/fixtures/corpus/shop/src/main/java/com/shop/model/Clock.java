package com.shop.model;

public interface Clock {
    long nowMillis();
}
