"""Queue selection kernel for one bank.

Kept free of scheduler state so it can be driven directly from tests and from
the simulation baselines.
"""

from __future__ import annotations

import enum
from typing import NamedTuple, Sequence

# Scores live in [0, 1]; anything closer than this to the best score is a tie.
TIE_TOLERANCE = 1e-12


class Reason(str, enum.Enum):
    EMPTY_PREFERENCE = "EmptyPreference"
    SCORED_SELECTION = "ScoredSelection"
    TIE_BREAK = "TieBreak"


class Choice(NamedTuple):
    index: int
    reason: Reason
    pointer: int  # rotation pointer to use on the next call


def rotate_pick(candidates: Sequence[int], pointer: int) -> int:
    """First candidate at or after ``pointer``; wraps to the lowest index."""
    for i in candidates:
        if i >= pointer:
            return i
    return candidates[0]


def score_queues(
    load_rates: Sequence[float],
    proc_rates: Sequence[float],
    weight_load: float,
    weight_rate: float,
) -> list[float]:
    """score = w_v * (1 - V) + w_d * D / max(D); the rate term is 0 when max(D) == 0."""
    top = max(proc_rates)
    if top > 0:
        return [
            weight_load * (1.0 - v) + weight_rate * (d / top)
            for v, d in zip(load_rates, proc_rates)
        ]
    return [weight_load * (1.0 - v) for v in load_rates]


def choose_queue(
    depths: Sequence[int],
    load_rates: Sequence[float],
    proc_rates: Sequence[float],
    pointer: int,
    weight_load: float,
    weight_rate: float,
) -> Choice:
    """Pick a queue index. ``depths`` counts pending items; zero means idle."""
    n = len(depths)
    empty = [i for i, b in enumerate(depths) if b == 0]
    if empty:
        i = rotate_pick(empty, pointer)
        return Choice(i, Reason.EMPTY_PREFERENCE, (i + 1) % n)

    scores = score_queues(load_rates, proc_rates, weight_load, weight_rate)
    best = max(scores)
    tied = [i for i, s in enumerate(scores) if best - s <= TIE_TOLERANCE]
    if len(tied) == 1:
        return Choice(tied[0], Reason.SCORED_SELECTION, pointer)
    i = rotate_pick(tied, pointer)
    return Choice(i, Reason.TIE_BREAK, (i + 1) % n)


class WrrCursor:
    """Weighted round-robin over queue indices.

    Stays on a queue for ``weight`` consecutive picks, then moves on; queues
    with nothing pending are skipped and lose the rest of their turn.
    """

    def __init__(self, weights: Sequence[int]):
        self.weights = tuple(weights)
        self.cursor = 0
        self.credit = self.weights[0]

    def _advance(self) -> None:
        self.cursor = (self.cursor + 1) % len(self.weights)
        self.credit = self.weights[self.cursor]

    def pick(self, ready: Sequence[bool]) -> int | None:
        if not any(ready):
            return None
        while True:
            i = self.cursor
            if ready[i] and self.credit > 0:
                self.credit -= 1
                if self.credit == 0:
                    self._advance()
                return i
            self._advance()
