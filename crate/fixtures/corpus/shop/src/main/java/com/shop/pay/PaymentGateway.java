package com.shop.pay;

public abstract class PaymentGateway {
    protected String currency = "EUR";

    public abstract boolean charge(String account, long cents);

    public String currency() {
        return currency;
    }
}
