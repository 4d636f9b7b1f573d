package com.shop.util;

public class RateTracker {
    private long hits;
    private long windowStart = System.currentTimeMillis();

    public void recordHit() {
        hits++;
    }

    public double hitRate(long now) {
        long elapsed = Math.max(1, now - windowStart);
        return hits * 1000.0 / elapsed;
    }

    public void resetWindow(long now) {
        this.windowStart = now;
        this.hits = 0;
    }
}
