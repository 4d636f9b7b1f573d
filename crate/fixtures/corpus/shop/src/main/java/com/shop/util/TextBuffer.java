package com.shop.util;

public class TextBuffer {
    private final StringBuilder buffer = new StringBuilder();

    public TextBuffer appendText(String text) {
        buffer.append(text);
        return this;
    }

    public int bufferLength() {
        return buffer.length();
    }

    public void clearBuffer() {
        buffer.setLength(0);
    }

    public String reverseBuffer() {
        return new StringBuilder(buffer).reverse().toString();
    }
}
