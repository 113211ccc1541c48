"""Seeded synthetic workloads."""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from vidbus.errors import InvalidSpec
from vidbus.scheduler import SchedulerConfig, Transaction

ARRIVALS = ("poisson", "fixed")


@dataclass(frozen=True)
class WorkloadSpec:
    """Arrivals, priorities, payload sizes and the service model of one run.

    Service time of a transaction is ``payload_size / (worker_speed * m)``
    where ``m`` is the speed multiplier of the queue it was taken from;
    ``queue_speeds`` is cycled over the queues (PQ bank first, then WRR).
    """

    seed: int = 42
    txn_count: int = 10_000
    arrival: str = "poisson"
    arrival_rate: float = 10.0  # transactions per virtual second
    priority_mix: tuple[float, ...] = (0.1,) * 10
    payload_min: int = 256
    payload_max: int = 4096
    worker_speed: float = 4096.0  # bytes per virtual second
    queue_speeds: tuple[float, ...] = (1.0,)
    workers: int = 0  # 0 means one worker per queue

    def validate(self) -> None:
        if self.txn_count < 0:
            raise InvalidSpec("txn_count must be >= 0")
        if self.arrival not in ARRIVALS:
            raise InvalidSpec(f"arrival must be one of {ARRIVALS}")
        if not self.arrival_rate > 0:
            raise InvalidSpec("arrival_rate must be > 0")
        if len(self.priority_mix) != 10 or any(p < 0 for p in self.priority_mix) or sum(self.priority_mix) <= 0:
            raise InvalidSpec("priority_mix needs 10 non-negative weights with a positive sum")
        if self.payload_min < 0 or self.payload_max < self.payload_min:
            raise InvalidSpec("payload range must satisfy 0 <= payload_min <= payload_max")
        if not self.worker_speed > 0 or not self.queue_speeds or any(not s > 0 for s in self.queue_speeds):
            raise InvalidSpec("worker_speed and queue_speeds must be positive")
        if self.workers < 0:
            raise InvalidSpec("workers must be >= 0")

    def speeds_for(self, queue_count: int) -> list[float]:
        return [self.worker_speed * self.queue_speeds[i % len(self.queue_speeds)] for i in range(queue_count)]

    def worker_count(self, queue_count: int) -> int:
        return self.workers or queue_count

    @property
    def mean_payload(self) -> float:
        return (self.payload_min + self.payload_max) / 2


def generate_workload(spec: WorkloadSpec) -> list[Transaction]:
    spec.validate()
    rng = random.Random(spec.seed)
    priorities = range(10)
    out = []
    t = 0.0
    for n in range(spec.txn_count):
        if spec.arrival == "poisson":
            t += rng.expovariate(spec.arrival_rate)
        else:
            t = n / spec.arrival_rate
        prio = rng.choices(priorities, weights=spec.priority_mix)[0]
        size = rng.randint(spec.payload_min, spec.payload_max)
        out.append(Transaction(f"t{n:06d}", prio, None, t, None, size))
    return out


def service_capacity(spec: WorkloadSpec, queue_count: int) -> float:
    """Bytes/second the worker pool sustains when work is spread evenly over queues."""
    speeds = spec.speeds_for(queue_count)
    mean_service_per_byte = sum(1.0 / s for s in speeds) / len(speeds)
    return spec.worker_count(queue_count) / mean_service_per_byte


def standard_scenario(
    seed: int = 42,
    txn_count: int = 10_000,
    utilization: float = 0.9,
    pq_share: float = 0.2,
    queues_per_bank: int = 3,
    threshold: int = 3,
) -> tuple[WorkloadSpec, SchedulerConfig]:
    """Mixed-priority load on 1x/2x/4x queues at a target utilization."""
    if not 0 < utilization:
        raise InvalidSpec("utilization must be > 0")
    if not 0 <= pq_share <= 1:
        raise InvalidSpec("pq_share must be in [0, 1]")
    pq_classes = threshold + 1
    wrr_classes = 10 - pq_classes
    mix = tuple(
        pq_share / pq_classes if p <= threshold else (1 - pq_share) / wrr_classes
        for p in range(10)
    )
    config = SchedulerConfig(
        priority_threshold=threshold,
        pq_queues=queues_per_bank,
        wrr_queues=queues_per_bank,
        queue_capacity_bytes=1 << 30,
        sample_period=1.0,
        wrr_weights=tuple(int(m) for m in (1, 2, 4) * queues_per_bank)[:queues_per_bank],
    )
    base = WorkloadSpec(seed=seed, txn_count=txn_count, priority_mix=mix, queue_speeds=(1.0, 2.0, 4.0))
    total = config.pq_queues + config.wrr_queues
    rate = utilization * service_capacity(base, total) / base.mean_payload
    return replace(base, arrival_rate=rate), config
