package com.shop.notify;

public class EmailNotifier implements Notifier {
    private String sender = "noreply@shop.example";

    public EmailNotifier() {
    }

    /* Sends a formatted email. */
    public void notifyCustomer(String customer, String message) {
        System.out.println(sender + " -> " + customer + ": " + message);
    }
}
