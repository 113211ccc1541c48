"""Independent reference implementations the tests check the package against.

None of these import the code they check.
"""

from __future__ import annotations

from collections import deque

TIE = 1e-12


def brute_force_select(backlogs, load, rate, pointer, w_load, w_rate):
    """Walk the queues in rotation order from ``pointer`` and pick by the rules.

    Returns (index, reason, next_pointer).
    """
    n = len(backlogs)
    order = [(pointer + k) % n for k in range(n)]
    for i in order:
        if backlogs[i] == 0:
            return i, "EmptyPreference", (i + 1) % n
    top = 0.0
    for d in rate:
        if d > top:
            top = d
    scores = []
    for i in range(n):
        s = w_load * (1.0 - load[i])
        if top > 0:
            s = s + w_rate * (rate[i] / top)
        scores.append(s)
    best = max(scores)
    winners = [i for i in order if best - scores[i] <= TIE]
    if len(winners) == 1:
        return winners[0], "ScoredSelection", pointer
    return winners[0], "TieBreak", (winners[0] + 1) % n


def hand_wrr(weights, ready_sequence):
    """Weighted round robin written as an explicit schedule expansion."""
    slots = [i for i, w in enumerate(weights) for _ in range(w)]
    pos = 0
    out = []
    for ready in ready_sequence:
        if not any(ready):
            out.append(None)
            continue
        # skip a queue's remaining slots when it has nothing pending
        while not ready[slots[pos % len(slots)]]:
            q = slots[pos % len(slots)]
            while slots[pos % len(slots)] == q:
                pos += 1
        out.append(slots[pos % len(slots)])
        pos += 1
    return out


class EventLogReplay:
    """Recomputes scheduler counters from a log of (kind, ...) events.

    ``totals`` folds in only the events logged since its previous call, so
    checking after every event stays linear.
    """

    def __init__(self):
        self.log = []
        self._seen = 0
        self._c = {"submitted": 0, "completed": 0, "rejected": 0,
                   "submitted_bytes": 0, "completed_bytes": 0, "rejected_bytes": 0}
        self._queued = {}
        self._in_service = {}

    def record(self, *event):
        self.log.append(event)

    def totals(self):
        c, queued, in_service = self._c, self._queued, self._in_service
        for ev in self.log[self._seen:]:
            kind = ev[0]
            if kind == "submit":
                _, tid, size = ev
                c["submitted"] += 1
                c["submitted_bytes"] += size
                queued[tid] = size
            elif kind == "reject":
                _, tid, size = ev
                c["submitted"] += 1
                c["rejected"] += 1
                c["submitted_bytes"] += size
                c["rejected_bytes"] += size
            elif kind == "start":
                _, tid = ev
                in_service[tid] = queued.pop(tid)
            elif kind == "complete":
                _, tid = ev
                c["completed_bytes"] += in_service.pop(tid)
                c["completed"] += 1
        self._seen = len(self.log)
        return {
            **c,
            "queued": len(queued),
            "in_service": len(in_service),
            "in_flight": len(queued) + len(in_service),
            "backlog_bytes": sum(queued.values()),
            "in_service_bytes": sum(in_service.values()),
        }


def model_fifos(n):
    return [deque() for _ in range(n)]
