package com.shop.util;

import java.util.Random;

public class DiceRoller {
    private final Random rng = new Random(7);
    private int sides = 6;

    public int rollOnce() {
        return 1 + rng.nextInt(sides);
    }

    public int rollMany(int count) {
        int total = 0;
        for (int i = 0; i < count; i++) {
            total += rollOnce();
        }
        return total;
    }

    public void changeSides(int newSides) {
        this.sides = newSides;
    }
}
