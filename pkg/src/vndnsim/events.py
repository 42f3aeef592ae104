"""Minimal discrete-event engine: a heap of timed callbacks.

Ties on time break by scheduling order, so a run with identical inputs
replays the identical event sequence.  That property is what the rest of
the package leans on for bitwise-reproducible results.
"""

import heapq


class EventQueue:
    """Heap-ordered queue of (time, seq, callback, args) entries."""

    def __init__(self):
        self._heap = []
        self._seq = 0
        self.now = 0.0

    def schedule(self, delay, fn, *args):
        """Schedule fn(*args) at now + delay; returns the absolute time."""
        at = self.now + delay
        if at < self.now:  # guard against negative float noise
            at = self.now
        self._seq += 1
        heapq.heappush(self._heap, (at, self._seq, fn, args))
        return at

    def schedule_at(self, at, fn, *args):
        self._seq += 1
        heapq.heappush(self._heap, (at, self._seq, fn, args))
        return at

    def run(self, until=None):
        """Drain the queue, optionally stopping once time would pass `until`."""
        heap = self._heap
        pop = heapq.heappop
        while heap:
            at, seq, fn, args = pop(heap)
            if until is not None and at > until:
                # put it back unchanged; caller may resume later
                heapq.heappush(heap, (at, seq, fn, args))
                self.now = until
                return
            self.now = at
            fn(*args)
        if until is not None:
            self.now = until

    def __len__(self):
        return len(self._heap)
