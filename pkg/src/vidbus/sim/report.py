"""Side-by-side policy comparison written to disk.

``summary.csv`` columns, one row per (policy, priority class)::

    policy, priority, count, completed, rejected, mean_latency, p50_latency,
    p95_latency, max_latency, throughput_tps, throughput_bps, trace_hash

Empty latency cells mean the class had no completions.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Sequence

from vidbus.errors import InvalidSpec, IoError
from vidbus.scheduler import SchedulerConfig
from vidbus.sim.engine import SimReport, run
from vidbus.sim.policies import PolicyKind
from vidbus.sim.workload import WorkloadSpec

CSV_COLUMNS = [
    "policy",
    "priority",
    "count",
    "completed",
    "rejected",
    "mean_latency",
    "p50_latency",
    "p95_latency",
    "max_latency",
    "throughput_tps",
    "throughput_bps",
    "trace_hash",
]


def summary_rows(reports: Sequence[SimReport]) -> list[dict]:
    rows = []
    for r in reports:
        for p, c in sorted(r.classes.items()):
            lat = c.latency
            rows.append(
                {
                    "policy": r.policy,
                    "priority": p,
                    "count": c.count,
                    "completed": c.completed,
                    "rejected": c.rejected,
                    "mean_latency": lat.mean,
                    "p50_latency": lat.p50,
                    "p95_latency": lat.p95,
                    "max_latency": lat.max,
                    "throughput_tps": c.throughput_tps,
                    "throughput_bps": c.throughput_bps,
                    "trace_hash": r.trace_hash,
                }
            )
    return rows


def write_report(report: SimReport, path: os.PathLike | str) -> None:
    try:
        Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def compare(
    spec: WorkloadSpec,
    policies: Sequence[PolicyKind | str],
    config: SchedulerConfig,
    output_path: os.PathLike | str,
) -> list[SimReport]:
    if len(policies) < 2:
        raise InvalidSpec("compare needs at least two policies")
    kinds = [PolicyKind.parse(p) for p in policies]
    out = Path(output_path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc}") from exc
    reports = [run(spec, k, config) for k in kinds]
    for i, r in enumerate(reports):
        write_report(r, out / f"report_{i}_{r.policy}.json")
    rows = summary_rows(reports)
    try:
        with open(out / "summary.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
        (out / "summary.json").write_text(
            json.dumps(
                {
                    "policies": [r.policy for r in reports],
                    "trace_hashes": [r.trace_hash for r in reports],
                    "pq_class": {r.policy: r.to_dict()["pq_class"] for r in reports},
                    "wrr_class": {r.policy: r.to_dict()["wrr_class"] for r in reports},
                    "rows": rows,
                },
                indent=2,
                sort_keys=True,
            )
        )
    except OSError as exc:
        raise IoError(f"cannot write summary under {out}: {exc}") from exc
    return reports
