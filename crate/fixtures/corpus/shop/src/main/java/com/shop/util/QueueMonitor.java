package com.shop.util;

import java.util.ArrayDeque;
import java.util.Deque;

public class QueueMonitor {
    private final Deque<String> pending = new ArrayDeque<>();
    private int peakBacklog;

    public void enqueueJob(String job) {
        pending.addLast(job);
        peakBacklog = Math.max(peakBacklog, pending.size());
    }

    public String dequeueJob() {
        return pending.pollFirst();
    }

    public int backlog() {
        return pending.size();
    }

    public int peak() {
        return peakBacklog;
    }
}
