package com.shop.util;

public class PageCounter {
    private int pagesRead;
    private int pagesTotal = 300;

    public void readPages(int n) {
        pagesRead = Math.min(pagesTotal, pagesRead + n);
    }

    public int pagesLeft() {
        return pagesTotal - pagesRead;
    }

    public double readingProgress() {
        return (double) pagesRead / pagesTotal;
    }
}
