package com.shop.util;

public class UnitConverter {
    private double metersPerUnit = 0.3048;

    public double toMeters(double units) {
        return units * metersPerUnit;
    }

    public double fromMeters(double meters) {
        return meters / metersPerUnit;
    }

    public void calibrateUnit(double factor) {
        metersPerUnit = factor;
    }
}
