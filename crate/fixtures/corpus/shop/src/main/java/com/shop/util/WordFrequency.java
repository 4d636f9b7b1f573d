package com.shop.util;

import java.util.HashMap;
import java.util.Map;

public class WordFrequency {
    private final Map<String, Integer> frequencies = new HashMap<>();

    public void ingestLine(String line) {
        for (String w : line.split("\\s+")) {
            countWord(w);
        }
    }

    public void countWord(String word) {
        frequencies.merge(word.toLowerCase(), 1, Integer::sum);
    }

    public String mostFrequent() {
        String top = "";
        int topCount = 0;
        for (Map.Entry<String, Integer> e : frequencies.entrySet()) {
            if (e.getValue() > topCount) {
                top = e.getKey();
                topCount = e.getValue();
            }
        }
        return top;
    }
}
