package com.shop.util;

public class ColorMixer {
    private int red;
    private int green;
    private int blue;

    public void mixRed(int amount) {
        red = Math.min(255, red + amount);
    }

    public void brighten(int delta) {
        mixRed(delta);
        green = Math.min(255, green + delta);
        blue = Math.min(255, blue + delta);
    }

    public String toHex() {
        return String.format("#%02x%02x%02x", red, green, blue);
    }
}
