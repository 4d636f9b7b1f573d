package com.shop.util;

import java.util.HashMap;
import java.util.Map;

public class InventoryCounter {
    private final Map<String, Integer> stockLevels = new HashMap<>();

    public void restock(String sku, int amount) {
        stockLevels.merge(sku, amount, Integer::sum);
    }

    public boolean consumeStock(String sku) {
        int have = stockOf(sku);
        if (have == 0) {
            return false;
        }
        stockLevels.put(sku, have - 1);
        return true;
    }

    public int stockOf(String sku) {
        return stockLevels.getOrDefault(sku, 0);
    }
}
