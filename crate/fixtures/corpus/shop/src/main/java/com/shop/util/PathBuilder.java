package com.shop.util;

import java.util.ArrayList;
import java.util.List;

public class PathBuilder {
    private final List<String> segments = new ArrayList<>();
    private char separator = '/';

    public PathBuilder pushSegment(String segment) {
        segments.add(segment);
        return this;
    }

    public String popSegment() {
        return segments.remove(segments.size() - 1);
    }

    public String joinPath() {
        return String.join(String.valueOf(separator), segments);
    }
}
