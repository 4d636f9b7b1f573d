package com.shop.util;

public class ParkingMeter {
    private int minutesPaid;
    private int centsPerMinute = 5;

    public void insertCoins(int cents) {
        minutesPaid += cents / centsPerMinute;
    }

    public void elapseMinutes(int minutes) {
        minutesPaid = Math.max(0, minutesPaid - minutes);
    }

    public boolean meterExpired() {
        return minutesPaid == 0;
    }
}
