package com.shop.model;

public abstract class ShapeBase {
    public abstract double area();

    public double scaledArea(double factor) {
        return area() * factor * factor;
    }
}
