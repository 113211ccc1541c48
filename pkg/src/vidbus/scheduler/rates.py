"""Priority classification and the two per-queue rates used by the balancer."""

from __future__ import annotations

import enum

from vidbus.errors import (
    CapacityViolated,
    InvalidConfig,
    InvalidSampleWindow,
    MonotonicityViolated,
)

MIN_PRIORITY = 0
MAX_PRIORITY = 9


class Bank(str, enum.Enum):
    PQ = "PQ"
    WRR = "WRR"


def classify(priority: int, threshold: int) -> Bank:
    """Return the bank for a transaction priority.

    Smaller values are more urgent, so everything at or below the threshold
    goes to the strict-priority bank.
    """
    return Bank.PQ if priority <= threshold else Bank.WRR


def load_rate(backlog_bytes: int, capacity_bytes: int) -> float:
    """Pending bytes over queue capacity, always in [0, 1]."""
    if capacity_bytes <= 0:
        raise InvalidConfig(f"capacity_bytes must be > 0, got {capacity_bytes}")
    if backlog_bytes < 0 or backlog_bytes > capacity_bytes:
        raise CapacityViolated(
            f"backlog {backlog_bytes} outside [0, {capacity_bytes}]"
        )
    return backlog_bytes / capacity_bytes


def processing_rate(
    processed_now: int, processed_prev: int, now: float, prev: float
) -> float:
    """Average bytes/second processed between two sample points."""
    if now <= prev:
        raise InvalidSampleWindow(f"sample window must be positive (now={now}, prev={prev})")
    if processed_now < processed_prev:
        raise MonotonicityViolated(
            f"processed counter went backwards ({processed_prev} -> {processed_now})"
        )
    return (processed_now - processed_prev) / (now - prev)
