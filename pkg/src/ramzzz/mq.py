"""Multi-Queue (MQ) page-hotness tracking.

M LRU queues; queue i holds pages whose cumulative access count has reached
2**i.  A page idle past its expiration time sinks one queue.  Inside each
queue the head is the most recently touched page.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass


@dataclass(slots=True)
class PageDescriptor:
    page: int
    freq_counter: int
    queue_index: int
    expiration_time: int
    last_access: int


class MqStructure:
    def __init__(self, M: int = 16, lifetime: int = 100_000_000):
        if M < 1:
            raise ValueError("MQ needs at least one queue")
        if lifetime <= 0:
            raise ValueError("lifetime must be positive")
        self.M = M
        self.lifetime = lifetime
        self.counter_cap = 2 ** M
        # OrderedDict end == queue head (most recent)
        self.queues: list[OrderedDict[int, PageDescriptor]] = [OrderedDict() for _ in range(M)]
        self._where: dict[int, PageDescriptor] = {}

    def __len__(self) -> int:
        return len(self._where)

    def __contains__(self, page) -> bool:
        return page in self._where

    def descriptor(self, page) -> PageDescriptor:
        return self._where[page]

    def queue(self, i: int) -> list[int]:
        """Pages of queue ``i`` from head to tail."""
        return list(reversed(self.queues[i]))

    def on_access(self, page: int, now: int) -> PageDescriptor:
        d = self._where.get(page)
        if d is None:
            d = PageDescriptor(page, 1, 0, now + self.lifetime, now)
            self._where[page] = d
            self.queues[0][page] = d
            return d
        if d.freq_counter < self.counter_cap:
            d.freq_counter += 1
        d.last_access = now
        d.expiration_time = now + self.lifetime
        q = d.queue_index
        if q < self.M - 1 and d.freq_counter >= 2 ** (q + 1):
            del self.queues[q][page]
            d.queue_index = q + 1
            self.queues[q + 1][page] = d
        else:
            self.queues[q].move_to_end(page)
        return d

    def expire(self, now: int) -> int:
        """Sink every stale descriptor by one queue; returns how many moved."""
        moved = 0
        for i in range(1, self.M):
            queue = self.queues[i]
            # tail to head, so the stale pages keep their relative recency below
            stale = [d for d in queue.values() if d.expiration_time < now]
            for d in stale:
                del queue[d.page]
                d.queue_index = i - 1
                d.expiration_time = now + self.lifetime
                self.queues[i - 1][d.page] = d
                moved += 1
        return moved

    def hotness_order(self) -> list[int]:
        order = []
        for i in range(self.M - 1, -1, -1):
            order.extend(reversed(self.queues[i]))
        return order

    def level_report(self) -> list[float | None]:
        """Mean frequency counter per queue (None for an empty queue)."""
        return [
            sum(d.freq_counter for d in q.values()) / len(q) if q else None
            for q in self.queues
        ]


def mq_level_report(mq: MqStructure) -> list[float | None]:
    return mq.level_report()
