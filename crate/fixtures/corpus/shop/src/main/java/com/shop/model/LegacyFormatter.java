package com.shop.model;

public class LegacyFormatter {
    private String pattern = "%s";

    public String formatLegacy(String value) {
        return String.format(pattern, value);
    }

    public void usePattern(String p) {
        pattern = p;
    }
}
