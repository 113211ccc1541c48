"""Event-driven simulation on a virtual clock."""

from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass, field
from typing import Optional

from vidbus.errors import QueueFull
from vidbus.scheduler import SchedulerConfig
from vidbus.scheduler.metrics import LatencySummary
from vidbus.sim.policies import PolicyKind, make_policy
from vidbus.sim.workload import WorkloadSpec, generate_workload

ARRIVE, COMPLETE, TICK = 0, 1, 2


@dataclass(frozen=True)
class ClassReport:
    count: int
    completed: int
    rejected: int
    latency: LatencySummary
    throughput_tps: float
    throughput_bps: float


@dataclass
class SimReport:
    policy: str
    seed: int
    txn_count: int
    threshold: int
    classes: dict[int, ClassReport]
    queue_bytes: list[int]
    makespan: float
    trace_hash: str
    conservation_violations: int
    latencies: dict[int, list[float]] = field(default_factory=dict, repr=False)
    events: Optional[list[tuple]] = field(default=None, repr=False)

    def group_latency(self, priorities) -> LatencySummary:
        samples = [x for p in priorities for x in self.latencies.get(p, [])]
        return LatencySummary.of(samples)

    @property
    def pq_class(self) -> LatencySummary:
        return self.group_latency(range(self.threshold + 1))

    @property
    def wrr_class(self) -> LatencySummary:
        return self.group_latency(range(self.threshold + 1, 10))

    def to_dict(self) -> dict:
        def lat(s: LatencySummary) -> dict:
            return {"count": s.count, "mean": s.mean, "p50": s.p50, "p95": s.p95, "max": s.max}

        return {
            "policy": self.policy,
            "seed": self.seed,
            "txn_count": self.txn_count,
            "threshold": self.threshold,
            "makespan": self.makespan,
            "trace_hash": self.trace_hash,
            "conservation_violations": self.conservation_violations,
            "queue_bytes": self.queue_bytes,
            "pq_class": lat(self.pq_class),
            "wrr_class": lat(self.wrr_class),
            "classes": {
                str(p): {
                    "count": c.count,
                    "completed": c.completed,
                    "rejected": c.rejected,
                    "latency": lat(c.latency),
                    "throughput_tps": c.throughput_tps,
                    "throughput_bps": c.throughput_bps,
                }
                for p, c in sorted(self.classes.items())
            },
        }


def run(
    spec: WorkloadSpec,
    policy: PolicyKind | str,
    config: SchedulerConfig,
    record: bool = False,
) -> SimReport:
    """Simulate ``spec`` under ``policy``.

    Workers form one shared pool; whenever an event leaves a worker idle and
    the policy has queued work, the lowest-numbered idle worker takes it.
    ``record=True`` keeps the full event list on the report.
    """
    kind = PolicyKind.parse(policy)
    txns = generate_workload(spec)
    now = 0.0
    pol = make_policy(kind, config, lambda: now)
    speeds = spec.speeds_for(pol.queue_count)
    idle = list(range(spec.worker_count(pol.queue_count)))
    heapq.heapify(idle)

    seq = 0
    events: list[tuple] = []
    for txn in txns:
        events.append((txn.submitted_at, seq, ARRIVE, txn))
        seq += 1
    heapq.heapify(events)
    if txns:
        heapq.heappush(events, (config.sample_period, seq, TICK, None))
        seq += 1

    digest = hashlib.sha256(repr((kind.value, spec, config)).encode())
    log: Optional[list[tuple]] = [] if record else None

    def emit(*entry) -> None:
        digest.update(repr(entry).encode())
        digest.update(b"\n")
        if log is not None:
            log.append(entry)

    latencies: dict[int, list[float]] = {p: [] for p in range(10)}
    counts = [0] * 10
    rejected = [0] * 10
    done_bytes = [0] * 10
    queue_bytes = [0] * pol.queue_count
    queued = 0
    arrivals_left = len(txns)
    busy = 0
    violations = 0
    makespan = 0.0

    while events:
        now, _, kind_, item = heapq.heappop(events)
        if kind_ == ARRIVE:
            arrivals_left -= 1
            counts[item.priority] += 1
            try:
                q = pol.submit(item)
            except QueueFull:
                rejected[item.priority] += 1
                emit("R", now, item.id, item.priority)
            else:
                queued += 1
                emit("A", now, item.id, item.priority, q)
        elif kind_ == COMPLETE:
            txn, wid, q = item
            pol.complete(txn, wid, now)
            latencies[txn.priority].append(now - txn.submitted_at)
            done_bytes[txn.priority] += txn.payload_size
            queue_bytes[q] += txn.payload_size
            busy -= 1
            makespan = now
            heapq.heappush(idle, wid)
            emit("C", now, txn.id, wid, q)
        else:
            pol.tick(now)
            emit("T", now)
            if arrivals_left or busy or queued:
                heapq.heappush(events, (now + config.sample_period, seq, TICK, None))
                seq += 1

        while idle and queued:
            wid = heapq.heappop(idle)
            work = pol.next_work(wid)
            if work is None:
                heapq.heappush(idle, wid)
                break
            txn, q = work
            queued -= 1
            busy += 1
            finish = now + txn.payload_size / speeds[q]
            heapq.heappush(events, (finish, seq, COMPLETE, (txn, wid, q)))
            seq += 1
            emit("S", now, txn.id, wid, q, txn.priority)
        if idle and queued:
            violations += 1

    classes = {}
    for p in range(10):
        done = len(latencies[p])
        classes[p] = ClassReport(
            count=counts[p],
            completed=done,
            rejected=rejected[p],
            latency=LatencySummary.of(latencies[p]),
            throughput_tps=done / makespan if makespan > 0 else 0.0,
            throughput_bps=done_bytes[p] / makespan if makespan > 0 else 0.0,
        )
    return SimReport(
        policy=kind.value,
        seed=spec.seed,
        txn_count=spec.txn_count,
        threshold=config.priority_threshold,
        classes=classes,
        queue_bytes=queue_bytes,
        makespan=makespan,
        trace_hash=digest.hexdigest(),
        conservation_violations=violations,
        latencies=latencies,
        events=log,
    )
