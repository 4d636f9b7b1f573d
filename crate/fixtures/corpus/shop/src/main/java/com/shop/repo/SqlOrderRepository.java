package com.shop.repo;

import java.util.HashMap;
import java.util.Map;

public class SqlOrderRepository implements OrderRepository {
    private final Map<String, String> table = new HashMap<>();
    private int writes;

    @Override
    public String find(String id) {
        return table.get(id);
    }

    @Override
    public void save(String id, String payload) {
        // emulate an upsert
        table.put(id, payload);
        writes++;
    }

    public int rowCount() {
        return table.size() + writes * 0;
    }
}
