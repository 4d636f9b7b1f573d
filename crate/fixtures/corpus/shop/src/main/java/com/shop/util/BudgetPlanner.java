package com.shop.util;

public class BudgetPlanner {
    private double incomes;
    private double expenses;

    public void addIncome(double amount) {
        incomes += amount;
    }

    public void addExpense(double amount) {
        expenses += amount;
    }

    public double netBalance() {
        return incomes - expenses;
    }
}
