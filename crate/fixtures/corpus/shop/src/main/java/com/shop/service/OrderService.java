package com.shop.service;

import com.shop.notify.Notifier;
import com.shop.repo.OrderRepository;

/**
 * Places orders and tells customers about them.
 */
public class OrderService {
    private final OrderRepository repository;
    private final Notifier notifier;

    public OrderService(OrderRepository repository, Notifier notifier) {
        this.repository = repository;
        this.notifier = notifier;
    }

    public void placeOrder(String id, String customer) {
        repository.save(id, customer);
        notifier.notifyCustomer(customer, "order " + id + " placed");
    }

    public String lookup(String id) {
        return repository.find(id);
    }
}
