package com.shop.app;

import com.shop.notify.EmailNotifier;
import com.shop.pay.StripeGateway;
import com.shop.repo.SqlOrderRepository;
import com.shop.service.BillingService;
import com.shop.service.OrderService;

public class ShopApp {
    public static void main(String[] args) {
        OrderService orders = new OrderService(new SqlOrderRepository(), new EmailNotifier());
        orders.placeOrder("o-1", "alice");
        BillingService billing = new BillingService(new StripeGateway());
        billing.setNotifier(new EmailNotifier());
        billing.bill("alice", 1299);
    }
}
