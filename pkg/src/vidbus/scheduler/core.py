"""Two-level differentiated-services transaction scheduler.

Transactions are split by priority into a strict-priority (PQ) bank and a
weighted round-robin (WRR) bank. Inside each bank a balancer places new work
on an idle queue if one exists, otherwise on the queue with the best mix of
low load rate and high processing rate. Workers always drain the PQ bank
before touching the WRR bank.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional

from vidbus.errors import InvalidConfig, InvalidTransaction, QueueFull, UnknownTransaction
from vidbus.scheduler.metrics import (
    ClassMetrics,
    LatencyTracker,
    MetricsSnapshot,
    QueueMetrics,
    Totals,
)
from vidbus.scheduler.rates import (
    MAX_PRIORITY,
    MIN_PRIORITY,
    Bank,
    classify,
    load_rate,
    processing_rate,
)
from vidbus.scheduler.selection import Reason, WrrCursor, choose_queue, rotate_pick

Clock = Callable[[], float]


@dataclass(frozen=True)
class Transaction:
    id: str
    priority: int
    payload: Optional[bytes] = b""
    submitted_at: float = 0.0
    reply_route: Any = None
    # Derived from ``payload``; set explicitly only for synthetic work (payload=None).
    payload_size: int = -1

    def __post_init__(self):
        if not (MIN_PRIORITY <= self.priority <= MAX_PRIORITY):
            raise InvalidTransaction(f"priority {self.priority} outside 0..9")
        if self.payload is None:
            if self.payload_size < 0:
                raise InvalidTransaction("synthetic transaction needs payload_size >= 0")
        elif self.payload_size == -1:
            object.__setattr__(self, "payload_size", len(self.payload))
        elif self.payload_size != len(self.payload):
            raise InvalidTransaction("payload_size does not match payload length")


@dataclass
class SchedulerConfig:
    priority_threshold: int = 3
    pq_queues: int = 2
    wrr_queues: int = 4
    queue_capacity_bytes: int = 1 << 20
    sample_period: float = 1.0
    weight_load: float = 0.5
    weight_rate: float = 0.5
    # one positive integer per WRR-bank queue; None means all ones
    wrr_weights: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.wrr_weights is None:
            self.wrr_weights = (1,) * self.wrr_queues
        else:
            self.wrr_weights = tuple(self.wrr_weights)
        self.validate()

    def validate(self) -> None:
        if not (MIN_PRIORITY <= self.priority_threshold <= MAX_PRIORITY):
            raise InvalidConfig("priority_threshold must be in 0..9")
        if self.pq_queues < 1 or self.wrr_queues < 1:
            raise InvalidConfig("each bank needs at least one queue")
        if self.queue_capacity_bytes <= 0:
            raise InvalidConfig("queue_capacity_bytes must be > 0")
        if self.sample_period <= 0:
            raise InvalidConfig("sample_period must be > 0")
        for name in ("weight_load", "weight_rate"):
            w = getattr(self, name)
            if not 0.0 <= w <= 1.0:
                raise InvalidConfig(f"{name} must be in [0, 1]")
        if abs(self.weight_load + self.weight_rate - 1.0) > 1e-9:
            raise InvalidConfig("weight_load + weight_rate must equal 1")
        if len(self.wrr_weights) != self.wrr_queues:
            raise InvalidConfig("wrr_weights needs one entry per WRR queue")
        if any(int(w) != w or w < 1 for w in self.wrr_weights):
            raise InvalidConfig("wrr_weights must be positive integers")

    def queue_count(self, bank: Bank) -> int:
        return self.pq_queues if bank is Bank.PQ else self.wrr_queues


@dataclass
class QueueStats:
    processed_total: int = 0
    processed_at_prev_sample: int = 0
    prev_sample_time: float = 0.0
    last_sample_time: float = 0.0
    processing_rate: float = 0.0
    load_rate: float = 0.0


@dataclass
class QueueState:
    bank: Bank
    index: int
    capacity_bytes: int
    backlog_bytes: int = 0
    fifo: deque = field(default_factory=deque)
    stats: QueueStats = field(default_factory=QueueStats)


@dataclass(frozen=True)
class AssignmentDecision:
    bank: Bank
    queue_index: int
    reason: Reason


@dataclass
class _Flight:
    txn: Transaction
    bank: Bank
    index: int
    worker_id: Optional[int] = None


class _ClassCounters:
    __slots__ = ("submitted", "completed", "rejected", "latencies")

    def __init__(self):
        self.submitted = 0
        self.completed = 0
        self.rejected = 0
        self.latencies = LatencyTracker()


class Scheduler:
    """Thread-safe scheduler; every public method runs under one lock.

    ``clock`` supplies timestamps for stats and snapshots. Simulations pass a
    virtual clock so that nothing on their path reads wall time.
    """

    def __init__(self, config: SchedulerConfig, clock: Clock = time.monotonic):
        config.validate()
        self.config = config
        self.clock = clock
        self._lock = threading.RLock()
        start = clock()
        self.banks: dict[Bank, list[QueueState]] = {}
        for bank in Bank:
            queues = []
            for i in range(config.queue_count(bank)):
                q = QueueState(bank, i, config.queue_capacity_bytes)
                q.stats.prev_sample_time = q.stats.last_sample_time = start
                queues.append(q)
            self.banks[bank] = queues
        self._select_ptr = {bank: 0 for bank in Bank}
        self._pq_ptr = 0
        self._wrr = WrrCursor(config.wrr_weights)
        self._flights: dict[str, _Flight] = {}
        self._classes = [_ClassCounters() for _ in range(MAX_PRIORITY + 1)]
        self._bytes = {"submitted": 0, "completed": 0, "rejected": 0}
        self._last_sample = start

    # -- balancing -------------------------------------------------------

    def select_queue(self, bank: Bank) -> AssignmentDecision:
        with self._lock:
            return self._select(bank)

    def _select(self, bank: Bank) -> AssignmentDecision:
        queues = self.banks[bank]
        choice = choose_queue(
            [len(q.fifo) for q in queues],
            [q.stats.load_rate for q in queues],
            [q.stats.processing_rate for q in queues],
            self._select_ptr[bank],
            self.config.weight_load,
            self.config.weight_rate,
        )
        self._select_ptr[bank] = choice.pointer
        return AssignmentDecision(bank, choice.index, choice.reason)

    def submit(self, txn: Transaction) -> AssignmentDecision:
        """Classify, balance and enqueue. Raises QueueFull on overflow."""
        with self._lock:
            if txn.id in self._flights:
                raise InvalidTransaction(f"duplicate transaction id {txn.id!r}")
            bank = classify(txn.priority, self.config.priority_threshold)
            decision = self._select(bank)
            q = self.banks[bank][decision.queue_index]
            counters = self._classes[txn.priority]
            counters.submitted += 1
            self._bytes["submitted"] += txn.payload_size
            if q.backlog_bytes + txn.payload_size > q.capacity_bytes:
                counters.rejected += 1
                self._bytes["rejected"] += txn.payload_size
                raise QueueFull(
                    f"{bank.value} queue {q.index} cannot take {txn.payload_size} bytes"
                )
            q.fifo.append(txn)
            q.backlog_bytes += txn.payload_size
            q.stats.load_rate = load_rate(q.backlog_bytes, q.capacity_bytes)
            self._flights[txn.id] = _Flight(txn, bank, q.index)
            return decision

    # -- dispensing ------------------------------------------------------

    def next_work(self, worker_id: int) -> Optional[Transaction]:
        """Dequeue the next transaction; PQ bank strictly before WRR bank."""
        with self._lock:
            pq = self.banks[Bank.PQ]
            busy = [q.index for q in pq if q.fifo]
            if busy:
                i = rotate_pick(busy, self._pq_ptr)
                self._pq_ptr = (i + 1) % len(pq)
                return self._dequeue(pq[i], worker_id)
            wrr = self.banks[Bank.WRR]
            i = self._wrr.pick([bool(q.fifo) for q in wrr])
            if i is None:
                return None
            return self._dequeue(wrr[i], worker_id)

    def _dequeue(self, q: QueueState, worker_id: int) -> Transaction:
        txn = q.fifo.popleft()
        q.backlog_bytes -= txn.payload_size
        q.stats.load_rate = load_rate(q.backlog_bytes, q.capacity_bytes)
        self._flights[txn.id].worker_id = worker_id
        return txn

    def complete(self, txn_id: str, worker_id: int, finished_at: float) -> None:
        with self._lock:
            flight = self._flights.get(txn_id)
            if flight is None or flight.worker_id is None:
                raise UnknownTransaction(f"transaction {txn_id!r} is not in service")
            if flight.worker_id != worker_id:
                raise UnknownTransaction(
                    f"transaction {txn_id!r} is held by worker {flight.worker_id}"
                )
            del self._flights[txn_id]
            txn = flight.txn
            self.banks[flight.bank][flight.index].stats.processed_total += txn.payload_size
            counters = self._classes[txn.priority]
            counters.completed += 1
            counters.latencies.add(finished_at - txn.submitted_at)
            self._bytes["completed"] += txn.payload_size

    # -- statistics ------------------------------------------------------

    def sample_stats(self, bank: Bank, now: float) -> list[QueueStats]:
        """Recompute load and processing rates for every queue of a bank."""
        with self._lock:
            out = []
            for q in self.banks[bank]:
                s = q.stats
                rate = processing_rate(
                    s.processed_total, s.processed_at_prev_sample, now, s.prev_sample_time
                )
                s.processing_rate = rate
                s.load_rate = load_rate(q.backlog_bytes, q.capacity_bytes)
                s.last_sample_time = now
                s.processed_at_prev_sample = s.processed_total
                s.prev_sample_time = now
                out.append(replace(s))
            return out

    def sample(self, now: float) -> None:
        with self._lock:
            for bank in Bank:
                self.sample_stats(bank, now)
            self._last_sample = now

    def tick(self, now: float) -> bool:
        """Sample both banks if a full period has elapsed since the last sample."""
        with self._lock:
            if now - self._last_sample >= self.config.sample_period:
                self.sample(now)
                return True
            return False

    def in_flight(self) -> int:
        with self._lock:
            return len(self._flights)

    def snapshot_metrics(self) -> MetricsSnapshot:
        with self._lock:
            queued = in_service = 0
            backlog = in_service_bytes = 0
            per_class_flight = [0] * (MAX_PRIORITY + 1)
            for f in self._flights.values():
                per_class_flight[f.txn.priority] += 1
                if f.worker_id is None:
                    queued += 1
                else:
                    in_service += 1
                    in_service_bytes += f.txn.payload_size
            queues = []
            for bank in Bank:
                for q in self.banks[bank]:
                    backlog += q.backlog_bytes
                    queues.append(
                        QueueMetrics(
                            bank=bank.value,
                            index=q.index,
                            depth=len(q.fifo),
                            backlog_bytes=q.backlog_bytes,
                            capacity_bytes=q.capacity_bytes,
                            load_rate=q.stats.load_rate,
                            processing_rate=q.stats.processing_rate,
                            processed_total=q.stats.processed_total,
                        )
                    )
            classes = {}
            for p, c in enumerate(self._classes):
                classes[p] = ClassMetrics(
                    submitted=c.submitted,
                    completed=c.completed,
                    rejected=c.rejected,
                    in_flight=per_class_flight[p],
                    latency=c.latencies.summary(),
                )
            totals = Totals(
                submitted=sum(c.submitted for c in self._classes),
                completed=sum(c.completed for c in self._classes),
                rejected=sum(c.rejected for c in self._classes),
                in_flight=queued + in_service,
                queued=queued,
                in_service=in_service,
                submitted_bytes=self._bytes["submitted"],
                completed_bytes=self._bytes["completed"],
                rejected_bytes=self._bytes["rejected"],
                backlog_bytes=backlog,
                in_service_bytes=in_service_bytes,
            )
            return MetricsSnapshot(self.clock(), totals, classes, queues)
