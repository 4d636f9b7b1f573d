package com.shop.util;

public class StockTicker {
    private double lastPrice;
    private double openPrice = 100.0;

    public void tickPrice(double price) {
        lastPrice = price;
    }

    public double dailyChange() {
        return lastPrice - openPrice;
    }

    /* percentage relative to the open */
    public double dailyChangePercent() {
        return dailyChange() / openPrice * 100;
    }
}
