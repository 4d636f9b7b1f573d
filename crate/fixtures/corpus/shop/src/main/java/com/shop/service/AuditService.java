package com.shop.service;

import com.shop.repo.OrderRepository;

public class AuditService {
    private final OrderRepository repository;
    private final int maxEntries;

    public AuditService(OrderRepository repository, int maxEntries) {
        this.repository = repository;
        this.maxEntries = maxEntries;
    }

    public boolean audit(String id) {
        return repository.find(id) != null && maxEntries > 0;
    }
}
