package com.shop.util;

import java.util.ArrayList;
import java.util.List;

public class TemperatureLog {
    private final List<Double> readings = new ArrayList<>();
    private String unit = "C";

    public void addReading(double value) {
        readings.add(value);
    }

    public double averageReading() {
        double sum = 0;
        for (double r : readings) {
            sum += r;
        }
        return readings.isEmpty() ? 0 : sum / readings.size();
    }

    public double maxReading() {
        double best = Double.NEGATIVE_INFINITY;
        for (double r : readings) {
            best = Math.max(best, r);
        }
        return best;
    }

    public String describeUnit() {
        return readings.size() + " readings in " + unit;
    }
}
