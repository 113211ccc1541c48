"""Scheduling policies driven by the simulator.

All policies see the same flat list of queues: the scheduler's PQ-bank
queues first, then its WRR-bank queues. ``submit`` returns the flat index of
the queue that received the transaction and raises QueueFull on overflow.
"""

from __future__ import annotations

import enum
from collections import deque
from typing import Callable, Optional

from vidbus.errors import InvalidSpec, QueueFull
from vidbus.scheduler import Bank, Scheduler, SchedulerConfig, Transaction
from vidbus.scheduler.selection import WrrCursor, rotate_pick


class PolicyKind(str, enum.Enum):
    RR = "rr"
    WRR = "wrr"
    PQ = "pq"
    HYBRID = "hybrid"

    @classmethod
    def parse(cls, value: "str | PolicyKind") -> "PolicyKind":
        try:
            return cls(value.lower() if isinstance(value, str) else value)
        except ValueError:
            raise InvalidSpec(f"unknown policy {value!r}; expected one of rr, wrr, pq, hybrid") from None


class HybridPolicy:
    """The two-level scheduler itself."""

    def __init__(self, config: SchedulerConfig, clock: Callable[[], float]):
        self.scheduler = Scheduler(config, clock)
        self.queue_count = config.pq_queues + config.wrr_queues
        self._offset = {Bank.PQ: 0, Bank.WRR: config.pq_queues}
        self._where: dict[str, int] = {}

    def submit(self, txn: Transaction) -> int:
        decision = self.scheduler.submit(txn)
        flat = self._offset[decision.bank] + decision.queue_index
        self._where[txn.id] = flat
        return flat

    def next_work(self, worker_id: int) -> Optional[tuple[Transaction, int]]:
        txn = self.scheduler.next_work(worker_id)
        if txn is None:
            return None
        return txn, self._where.pop(txn.id)

    def complete(self, txn: Transaction, worker_id: int, now: float) -> None:
        self.scheduler.complete(txn.id, worker_id, now)

    def tick(self, now: float) -> None:
        self.scheduler.sample(now)


class _FlatPolicy:
    """Shared bookkeeping for the single-discipline baselines."""

    def __init__(self, config: SchedulerConfig):
        self.queue_count = config.pq_queues + config.wrr_queues
        self.capacity = config.queue_capacity_bytes
        self.fifos: list[deque] = [deque() for _ in range(self.queue_count)]
        self.backlog = [0] * self.queue_count

    def _enqueue(self, txn: Transaction, q: int) -> int:
        if self.backlog[q] + txn.payload_size > self.capacity:
            raise QueueFull(f"queue {q} cannot take {txn.payload_size} bytes")
        self.fifos[q].append(txn)
        self.backlog[q] += txn.payload_size
        return q

    def _dequeue(self, q: int) -> tuple[Transaction, int]:
        txn = self.fifos[q].popleft()
        self.backlog[q] -= txn.payload_size
        return txn, q

    def complete(self, txn: Transaction, worker_id: int, now: float) -> None:
        pass

    def tick(self, now: float) -> None:
        pass


class RoundRobinPolicy(_FlatPolicy):
    """Assign and serve in plain rotation, ignoring priority."""

    def __init__(self, config: SchedulerConfig):
        super().__init__(config)
        self._assign = 0
        self._serve = 0

    def submit(self, txn: Transaction) -> int:
        q = self._assign
        self._assign = (q + 1) % self.queue_count
        return self._enqueue(txn, q)

    def next_work(self, worker_id: int):
        ready = [i for i, f in enumerate(self.fifos) if f]
        if not ready:
            return None
        q = rotate_pick(ready, self._serve)
        self._serve = (q + 1) % self.queue_count
        return self._dequeue(q)


class WeightedRoundRobinPolicy(_FlatPolicy):
    """Assign and serve in weighted rotation; weights cycle the config's wrr_weights."""

    def __init__(self, config: SchedulerConfig):
        super().__init__(config)
        w = config.wrr_weights
        weights = [w[i % len(w)] for i in range(self.queue_count)]
        self._assign = WrrCursor(weights)
        self._serve = WrrCursor(weights)
        self._always = [True] * self.queue_count

    def submit(self, txn: Transaction) -> int:
        return self._enqueue(txn, self._assign.pick(self._always))

    def next_work(self, worker_id: int):
        q = self._serve.pick([bool(f) for f in self.fifos])
        return None if q is None else self._dequeue(q)


class PriorityPolicy(_FlatPolicy):
    """Strict priority over P_i (FIFO within a level); queues assigned in rotation."""

    def __init__(self, config: SchedulerConfig):
        super().__init__(config)
        self._assign = 0
        self._levels: list[deque] = [deque() for _ in range(10)]

    def submit(self, txn: Transaction) -> int:
        q = self._assign
        if self.backlog[q] + txn.payload_size > self.capacity:
            raise QueueFull(f"queue {q} cannot take {txn.payload_size} bytes")
        self._assign = (q + 1) % self.queue_count
        self.backlog[q] += txn.payload_size
        self._levels[txn.priority].append((txn, q))
        return q

    def next_work(self, worker_id: int):
        for level in self._levels:
            if level:
                txn, q = level.popleft()
                self.backlog[q] -= txn.payload_size
                return txn, q
        return None


def make_policy(kind: PolicyKind, config: SchedulerConfig, clock: Callable[[], float]):
    kind = PolicyKind.parse(kind)
    if kind is PolicyKind.HYBRID:
        return HybridPolicy(config, clock)
    if kind is PolicyKind.RR:
        return RoundRobinPolicy(config)
    if kind is PolicyKind.WRR:
        return WeightedRoundRobinPolicy(config)
    return PriorityPolicy(config)
