"""Point-in-time scheduler metrics and their JSON form.

JSON layout (field names are stable)::

    {
      "taken_at": float,
      "totals": {"submitted", "completed", "rejected", "in_flight", "queued",
                 "in_service", "submitted_bytes", "completed_bytes",
                 "rejected_bytes", "backlog_bytes", "in_service_bytes"},
      "classes": {"0".."9": {"submitted", "completed", "rejected", "in_flight",
                             "latency": {"count", "mean", "p50", "p95", "max"}}},
      "queues": [{"bank", "index", "depth", "backlog_bytes", "capacity_bytes",
                  "load_rate", "processing_rate", "processed_total"}]
    }

Latency fields are ``null`` for a class with no completions. ``count``,
``mean`` and ``max`` cover every completion; ``p50``/``p95`` cover the most
recent LATENCY_WINDOW completions of the class.
"""

from __future__ import annotations

import bisect
import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

LATENCY_WINDOW = 1 << 16


def _nearest_rank(ordered: Sequence[float], pct: float) -> float:
    rank = max(1, math.ceil(pct / 100.0 * len(ordered)))
    return ordered[rank - 1]


def percentile(values: Sequence[float], pct: float) -> float:
    """Nearest-rank percentile of an unsorted sequence."""
    if not values:
        raise ValueError("percentile of empty sequence")
    return _nearest_rank(sorted(values), pct)


@dataclass(frozen=True)
class LatencySummary:
    count: int
    mean: Optional[float]
    p50: Optional[float]
    p95: Optional[float]
    max: Optional[float]

    @classmethod
    def of(cls, samples: Sequence[float]) -> "LatencySummary":
        if not samples:
            return cls(0, None, None, None, None)
        return cls(
            count=len(samples),
            mean=math.fsum(samples) / len(samples),
            p50=percentile(samples, 50),
            p95=percentile(samples, 95),
            max=max(samples),
        )


class LatencyTracker:
    """Incremental latency statistics so snapshots stay cheap on a long-running daemon."""

    def __init__(self, window: int = LATENCY_WINDOW):
        self.count = 0
        self.total = 0.0
        self.max: Optional[float] = None
        self._recent: deque = deque()
        self._ordered: list[float] = []
        self._window = window

    def add(self, sample: float) -> None:
        self.count += 1
        self.total += sample
        if self.max is None or sample > self.max:
            self.max = sample
        if len(self._recent) == self._window:
            old = self._recent.popleft()
            del self._ordered[bisect.bisect_left(self._ordered, old)]
        self._recent.append(sample)
        bisect.insort(self._ordered, sample)

    def summary(self) -> LatencySummary:
        if not self.count:
            return LatencySummary(0, None, None, None, None)
        return LatencySummary(
            count=self.count,
            mean=self.total / self.count,
            p50=_nearest_rank(self._ordered, 50),
            p95=_nearest_rank(self._ordered, 95),
            max=self.max,
        )


@dataclass(frozen=True)
class ClassMetrics:
    submitted: int
    completed: int
    rejected: int
    in_flight: int
    latency: LatencySummary


@dataclass(frozen=True)
class QueueMetrics:
    bank: str
    index: int
    depth: int
    backlog_bytes: int
    capacity_bytes: int
    load_rate: float
    processing_rate: float
    processed_total: int


@dataclass(frozen=True)
class Totals:
    submitted: int = 0
    completed: int = 0
    rejected: int = 0
    in_flight: int = 0
    queued: int = 0
    in_service: int = 0
    submitted_bytes: int = 0
    completed_bytes: int = 0
    rejected_bytes: int = 0
    backlog_bytes: int = 0
    in_service_bytes: int = 0


@dataclass(frozen=True)
class MetricsSnapshot:
    taken_at: float
    totals: Totals
    classes: dict[int, ClassMetrics] = field(default_factory=dict)
    queues: list[QueueMetrics] = field(default_factory=list)

    def conserved(self) -> bool:
        t = self.totals
        return (
            t.submitted == t.completed + t.in_flight + t.rejected
            and t.in_flight == t.queued + t.in_service
            and t.backlog_bytes
            == t.submitted_bytes - t.completed_bytes - t.in_service_bytes - t.rejected_bytes
        )

    def to_dict(self) -> dict:
        return {
            "taken_at": self.taken_at,
            "totals": asdict(self.totals),
            "classes": {str(k): asdict(v) for k, v in sorted(self.classes.items())},
            "queues": [asdict(q) for q in self.queues],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)
