package com.shop.util;

import java.util.HashMap;
import java.util.Map;

public class VoteBallot {
    private final Map<String, Integer> votes = new HashMap<>();

    public void castVote(String option) {
        votes.merge(option, 1, Integer::sum);
    }

    public int countVotes() {
        int total = 0;
        for (int v : votes.values()) {
            total += v;
        }
        return total;
    }

    public String leadingOption() {
        return votes.entrySet().stream()
            .max(Map.Entry.comparingByValue())
            .map(Map.Entry::getKey)
            .orElse("none");
    }
}
