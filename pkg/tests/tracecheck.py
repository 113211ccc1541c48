"""Randomized scheduler traces checked against a shadow model after every step."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

from oracles import EventLogReplay

from vidbus.errors import QueueFull
from vidbus.scheduler import Bank, Reason, Scheduler, SchedulerConfig, Transaction


@dataclass
class Violations:
    empty_preference: int = 0
    fifo: int = 0
    precedence: int = 0
    conservation: int = 0
    replay: int = 0
    events: int = 0
    details: list = field(default_factory=list)

    def total(self) -> int:
        return self.empty_preference + self.fifo + self.precedence + self.conservation + self.replay


def random_trace(seed: int, events: int, snapshot_every: int = 1) -> Violations:
    rng = random.Random(seed)
    now = [0.0]
    cfg = SchedulerConfig(
        priority_threshold=rng.randint(0, 8),
        pq_queues=rng.randint(1, 4),
        wrr_queues=rng.randint(1, 4),
        queue_capacity_bytes=rng.choice([300, 1000, 5000]),
        sample_period=0.5,
    )
    cfg = SchedulerConfig(**{**cfg.__dict__, "wrr_weights": tuple(rng.randint(1, 3) for _ in range(cfg.wrr_queues))})
    sched = Scheduler(cfg, clock=lambda: now[0])
    model = {bank: [deque() for _ in sched.banks[bank]] for bank in Bank}
    where: dict[str, tuple[Bank, int]] = {}
    in_service: dict[str, int] = {}
    replay = EventLogReplay()
    v = Violations()
    next_id = 0

    def apply(step):
        nonlocal next_id
        op = rng.random()
        if op < 0.45:
            prio = rng.randint(0, 9)
            size = rng.randint(0, 250)
            txn = Transaction(f"x{next_id}", prio, bytes(size), now[0])
            next_id += 1
            bank = Bank.PQ if prio <= cfg.priority_threshold else Bank.WRR
            had_empty = [i for i, q in enumerate(model[bank]) if not q]
            try:
                d = sched.submit(txn)
            except QueueFull:
                replay.record("reject", txn.id, size)
                if had_empty and size <= cfg.queue_capacity_bytes:
                    v.empty_preference += 1
                    v.details.append(("rejected despite empty queue", step))
                return
            replay.record("submit", txn.id, size)
            if d.bank is not bank:
                v.precedence += 1
            if had_empty and (d.reason is not Reason.EMPTY_PREFERENCE or d.queue_index not in had_empty):
                v.empty_preference += 1
                v.details.append(("empty preference", step, d))
            model[bank][d.queue_index].append(txn.id)
            where[txn.id] = (bank, d.queue_index)
        elif op < 0.8:
            pq_busy = any(model[Bank.PQ])
            wid = rng.randint(0, 3)
            txn = sched.next_work(wid)
            if txn is None:
                if any(any(qs) for qs in model.values()):
                    v.fifo += 1
                return
            bank, idx = where.pop(txn.id)
            if pq_busy and bank is Bank.WRR:
                v.precedence += 1
                v.details.append(("WRR served while PQ busy", step))
            if not model[bank][idx] or model[bank][idx][0] != txn.id:
                v.fifo += 1
                v.details.append(("fifo", step, txn.id))
            else:
                model[bank][idx].popleft()
            in_service[txn.id] = wid
            replay.record("start", txn.id)
        elif op < 0.97:
            if in_service:
                tid = rng.choice(sorted(in_service))
                sched.complete(tid, in_service.pop(tid), now[0])
                replay.record("complete", tid)
        else:
            sched.sample(now[0])

    for step in range(events):
        now[0] += rng.uniform(0.001, 0.05)
        apply(step)
        if step % snapshot_every == 0:
            snap = sched.snapshot_metrics()
            if not snap.conserved():
                v.conservation += 1
            expected = replay.totals()
            got = {k: getattr(snap.totals, k) for k in expected}
            if got != expected:
                v.replay += 1
                v.details.append(("replay", step, got, expected))
        v.events += 1
    return v
