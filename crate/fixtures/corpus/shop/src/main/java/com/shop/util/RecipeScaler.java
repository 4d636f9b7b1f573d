package com.shop.util;

public class RecipeScaler {
    private int baseServings = 4;
    private int wantedServings = 4;

    public void setWantedServings(int servings) {
        wantedServings = servings;
    }

    public double scaleAmount(double grams) {
        return grams * wantedServings / baseServings;
    }

    public boolean isScaledUp() {
        return wantedServings > baseServings;
    }
}
