package com.shop.repo;

import java.util.LinkedHashMap;
import java.util.Map;

public class CachedOrderRepository implements OrderRepository {
    private final int capacity;
    private final Map<String, String> cache = new LinkedHashMap<>();

    public CachedOrderRepository(int capacity) {
        this.capacity = capacity;
    }

    public String find(String id) {
        return cache.get(id);
    }

    public void save(String id, String payload) {
        if (cache.size() >= capacity) {
            cache.clear();
        }
        cache.put(id, payload);
    }
}
