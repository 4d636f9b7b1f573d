package com.shop.repo;

/** Storage for order payloads keyed by id. */
public interface OrderRepository {
    String find(String id);

    void save(String id, String payload);
}
