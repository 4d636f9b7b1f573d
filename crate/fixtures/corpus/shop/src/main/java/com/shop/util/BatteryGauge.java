package com.shop.util;

public class BatteryGauge {
    private int chargePercent = 100;

    public void drainBattery(int amount) {
        chargePercent = Math.max(0, chargePercent - amount);
    }

    public void chargeBattery(int amount) {
        chargePercent = Math.min(100, chargePercent + amount);
    }

    public boolean batteryLow() {
        return chargePercent < 15;
    }
}
