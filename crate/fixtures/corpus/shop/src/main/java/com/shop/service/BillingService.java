package com.shop.service;

import com.shop.notify.Notifier;
import com.shop.pay.PaymentGateway;

public class BillingService {
    private PaymentGateway gateway;
    private Notifier notifier;

    public BillingService(PaymentGateway gateway) {
        this.gateway = gateway;
    }

    public void setNotifier(Notifier notifier) {
        this.notifier = notifier;
    }

    public boolean bill(String account, long cents) {
        boolean ok = gateway.charge(account, cents);
        if (ok && notifier != null) {
            notifier.notifyCustomer(account, "charged " + cents);
        }
        return ok;
    }
}
