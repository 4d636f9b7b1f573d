package com.shop.service;

import com.shop.notify.EmailNotifier;
import com.shop.repo.SqlOrderRepository;
import org.junit.jupiter.api.Test;

class OrderServiceTest {
    private final OrderService service = new OrderService(new SqlOrderRepository(), new EmailNotifier());

    @Test
    void placesOrder() {
        service.placeOrder("1", "bob");
    }

    @Test
    void looksUp() {
        service.placeOrder("2", "eve");
        service.lookup("2");
    }

    @Test
    void missingIsNull() {
        service.lookup("404");
    }
}
