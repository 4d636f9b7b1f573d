package com.shop.util;

import java.util.Map;
import java.util.TreeMap;

public class ScoreBoard {
    private final Map<String, Integer> scores = new TreeMap<>();

    public void addScore(String player, int points) {
        scores.merge(player, points, Integer::sum);
    }

    public String topScorer() {
        String best = null;
        for (Map.Entry<String, Integer> e : scores.entrySet()) {
            if (best == null || e.getValue() > scores.get(best)) {
                best = e.getKey();
            }
        }
        return best;
    }

    public int totalScore() {
        return scores.values().stream().mapToInt(Integer::intValue).sum();
    }
}
