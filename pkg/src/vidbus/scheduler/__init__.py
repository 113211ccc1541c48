from vidbus.scheduler.core import (
    AssignmentDecision,
    QueueState,
    QueueStats,
    Scheduler,
    SchedulerConfig,
    Transaction,
)
from vidbus.scheduler.metrics import MetricsSnapshot, percentile
from vidbus.scheduler.rates import Bank, classify, load_rate, processing_rate
from vidbus.scheduler.selection import Reason, choose_queue

__all__ = [
    "AssignmentDecision",
    "Bank",
    "MetricsSnapshot",
    "QueueState",
    "QueueStats",
    "Reason",
    "Scheduler",
    "SchedulerConfig",
    "Transaction",
    "choose_queue",
    "classify",
    "load_rate",
    "percentile",
    "processing_rate",
]
