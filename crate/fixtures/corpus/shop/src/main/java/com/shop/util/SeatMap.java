package com.shop.util;

public class SeatMap {
    private final boolean[] taken = new boolean[40];

    public boolean bookSeat(int seat) {
        if (taken[seat]) {
            return false;
        }
        taken[seat] = true;
        return true;
    }

    public void releaseSeat(int seat) {
        taken[seat] = false;
    }

    public int freeSeats() {
        int free = 0;
        for (boolean t : taken) {
            if (!t) {
                free++;
            }
        }
        return free;
    }
}
