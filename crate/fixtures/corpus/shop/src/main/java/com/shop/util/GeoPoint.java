package com.shop.util;

public class GeoPoint {
    private double lat;
    private double lon;

    public GeoPoint() {
        this(0, 0);
    }

    public GeoPoint(double lat, double lon) {
        this.lat = lat;
        this.lon = lon;
    }

    public double latitudeDegrees() {
        return lat;
    }

    public double longitudeDegrees() {
        return lon;
    }

    public void shiftNorth(double degrees) {
        lat = lat + degrees;
        normalizeCoords();
    }

    private void normalizeCoords() {
        lat = Math.max(-90, Math.min(90, lat));
        lon = ((lon + 540) % 360) - 180;
    }
}
