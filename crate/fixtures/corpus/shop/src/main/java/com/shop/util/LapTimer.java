package com.shop.util;

import java.util.ArrayList;
import java.util.List;

public class LapTimer {
    private final List<Long> laps = new ArrayList<>();

    public void recordLap(long millis) {
        laps.add(millis);
    }

    public long fastestLap() {
        long best = Long.MAX_VALUE;
        for (long l : laps) {
            best = Math.min(best, l);
        }
        return best;
    }

    // total of every recorded lap
    public long totalLapTime() {
        long sum = 0;
        for (long l : laps) {
            sum += l;
        }
        return sum;
    }
}
