"""Evaluation rows, seed aggregation and the metrics CSV."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from app.config import METRICS_FIELDS
from app.errors import DomainError


@dataclass(frozen=True)
class EvalRow:
    """Mean undiscounted return of one evaluation block of one seed."""
    step: int
    seed: int
    mean_return: float
    episodes: int


@dataclass(frozen=True)
class AggregateRow:
    step: int
    mean_return: float
    std_return: float
    moving_avg: float


@dataclass
class RunMetrics:
    rows: list[EvalRow]
    aggregates: list[AggregateRow]

    @property
    def final_moving_avg(self) -> float:
        return self.aggregates[-1].moving_avg if self.aggregates else float("nan")


def moving_average(series: Sequence[float], window: int) -> np.ndarray:
    """Trailing mean over at most `window` points, truncated at the series start."""
    if window < 1:
        raise DomainError(f"window must be >= 1, got {window}")
    values = np.asarray(series, dtype=np.float64)
    sums = np.concatenate([[0.0], np.cumsum(values)])
    idx = np.arange(1, len(values) + 1)
    lo = np.maximum(0, idx - window)
    return (sums[idx] - sums[lo]) / (idx - lo)


def aggregate(rows: Sequence[EvalRow], window: int) -> list[AggregateRow]:
    """Per-step seed mean and population std, then the moving average of the mean."""
    if not rows:
        raise DomainError("no evaluation rows to aggregate")
    by_step: dict[int, list[float]] = {}
    for row in rows:
        by_step.setdefault(row.step, []).append(row.mean_return)
    steps = sorted(by_step)
    means = [float(np.mean(by_step[t])) for t in steps]
    stds = [float(np.std(by_step[t])) for t in steps]
    smooth = moving_average(means, window)
    return [
        AggregateRow(step=t, mean_return=m, std_return=sd, moving_avg=float(ma))
        for t, m, sd, ma in zip(steps, means, stds, smooth)
    ]


def _fmt(x: float) -> str:
    return format(x, ".12g")


def csv_rows(rows: Sequence[EvalRow], aggregates: Sequence[AggregateRow], window: int) -> list[dict]:
    """Per-seed rows ordered by (seed, step), followed by the seed-mean rows."""
    out = []
    for seed in sorted({r.seed for r in rows}):
        series = sorted((r for r in rows if r.seed == seed), key=lambda r: r.step)
        smooth = moving_average([r.mean_return for r in series], window)
        for r, ma in zip(series, smooth):
            out.append({
                "step": r.step, "seed": seed, "mean_return": _fmt(r.mean_return),
                "std_return": "", "moving_avg": _fmt(float(ma)),
            })
    for a in aggregates:
        out.append({
            "step": a.step, "seed": "mean", "mean_return": _fmt(a.mean_return),
            "std_return": _fmt(a.std_return), "moving_avg": _fmt(a.moving_avg),
        })
    return out


def render_csv(records: Iterable[dict]) -> str:
    output = io.StringIO()
    writer = csv.DictWriter(output, fieldnames=METRICS_FIELDS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow(rec)
    return output.getvalue()


def parse_csv(text: str) -> list[EvalRow]:
    """Per-seed rows back out of a metrics CSV; aggregate rows are skipped."""
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        if rec["seed"] == "mean":
            continue
        rows.append(EvalRow(int(rec["step"]), int(rec["seed"]), float(rec["mean_return"]), 0))
    return rows
