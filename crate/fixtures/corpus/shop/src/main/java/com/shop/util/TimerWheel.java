package com.shop.util;

public class TimerWheel {
    private long ticks;
    private final boolean[] slots = new boolean[64];

    public void advanceTick() {
        ticks++;
        slots[(int) (ticks % slots.length)] = false;
    }

    public void scheduleSlot(int delay) {
        slots[(int) ((ticks + delay) % slots.length)] = true;
    }

    public int occupiedSlots() {
        int n = 0;
        for (boolean s : slots) {
            if (s) {
                n++;
            }
        }
        return n;
    }
}
