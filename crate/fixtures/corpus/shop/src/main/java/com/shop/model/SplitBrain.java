package com.shop.model;

public class SplitBrain {
    private int leftCount;
    private String rightLabel = "";

    public void bumpLeft() {
        leftCount++;
    }

    public int leftValue() {
        return leftCount;
    }

    public void renameRight(String label) {
        rightLabel = label;
    }

    public String rightValue() {
        return rightLabel;
    }
}
