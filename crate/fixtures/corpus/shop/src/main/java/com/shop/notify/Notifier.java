package com.shop.notify;

public interface Notifier {
    void notifyCustomer(String customer, String message);
}
