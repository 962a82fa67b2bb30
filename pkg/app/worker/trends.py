"""Agent comparisons behind the headline trends, with a pass/fail check per trend.

Three comparisons run multi-seed experiments through the orchestrator:

    full_vs_top_k       full-slate vs simple top-K agents per slate size
    neighbour_counts    DPG+kNN with k = all, 10% and 1 candidates per slot
    risk_exponents      full-slate agents trained on r**alpha, on a given environment

Each returns TrendRun summaries keyed by run name; the check_* functions turn
those into CriterionCheck verdicts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from app.metrics import RunMetrics
from app.worker.experiment import parse_experiment_config
from app.worker.orchestrator import run_experiment

logger = logging.getLogger(__name__)

SLATE_SIZES = (10, 5, 1)
# None is the default 10% of candidates
NEIGHBOUR_COUNTS: tuple[int | str | None, ...] = ("all", None, 1)
RISK_EXPONENTS = (0.5, 1.0, 2.0, 4.0)

FULL_OVER_TOP_K = 1.1
NEIGHBOUR_RATIO = 0.9
RISK_FACTOR = 5.0


@dataclass(frozen=True)
class TrendRun:
    """Final numbers of one multi-seed experiment."""
    name: str
    final: float
    per_seed: dict[int, float]
    seed_std: float


@dataclass(frozen=True)
class CriterionCheck:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def summarize(name: str, metrics: RunMetrics) -> TrendRun:
    """Seed-mean final moving average, plus each seed's last evaluation."""
    last = max(r.step for r in metrics.rows)
    per_seed = {r.seed: r.mean_return for r in metrics.rows if r.step == last}
    return TrendRun(name, metrics.final_moving_avg, per_seed, metrics.aggregates[-1].std_return)


def run_trend(name: str, base: dict, agent: dict, out: Path | None = None, workers: int = 1) -> TrendRun:
    data = {**base, "agent": agent}
    if out is not None:
        data["out"] = str(Path(out) / name)
    metrics = run_experiment(parse_experiment_config(data), workers=workers)
    run = summarize(name, metrics)
    logger.info(f"{name}: final moving average {run.final:.4f} (seed std {run.seed_std:.4f})")
    return run


def full_vs_top_k(
    base: dict,
    out: Path | None = None,
    workers: int = 1,
    sizes: Iterable[int] = SLATE_SIZES,
    agent: dict | None = None,
) -> dict[str, TrendRun]:
    runs = {}
    for size in sizes:
        for kind in ("full", "topk"):
            name = f"{kind}-l{size}"
            overrides = {**(agent or {}), "agent_kind": kind, "slate_size": size}
            runs[name] = run_trend(name, base, overrides, out, workers)
    return runs


def neighbour_counts(
    base: dict,
    out: Path | None = None,
    workers: int = 1,
    counts: Iterable[int | str | None] = NEIGHBOUR_COUNTS,
    agent: dict | None = None,
) -> dict[str, TrendRun]:
    runs = {}
    for knn in counts:
        name = f"dpgknn-k{knn or 'auto'}"
        overrides = {**(agent or {}), "agent_kind": "dpgknn", "knn_k": knn}
        runs[name] = run_trend(name, base, overrides, out, workers)
    return runs


def risk_exponents(
    base: dict,
    out: Path | None = None,
    workers: int = 1,
    alphas: Iterable[float] = RISK_EXPONENTS,
    agent: dict | None = None,
) -> dict[str, TrendRun]:
    """base must name the environment through env_path."""
    runs = {}
    for alpha in alphas:
        name = f"chain-alpha{alpha:g}"
        overrides = {"agent_kind": "full", "gamma": 0.99, **(agent or {}), "alpha": alpha}
        runs[name] = run_trend(name, base, overrides, out, workers)
    return runs


# ── Checks ────────────────────────────────────────────────────────────

def check_full_beats_top_k(
    runs: dict[str, TrendRun], size: int = 10, margin: float = FULL_OVER_TOP_K,
) -> CriterionCheck:
    full, topk = runs[f"full-l{size}"], runs[f"topk-l{size}"]
    return CriterionCheck(
        f"full slate >= {margin:g} x top-K at l={size}",
        full.final >= margin * topk.final,
        f"{full.final:.4f} vs {topk.final:.4f}",
    )


def check_single_slot_agreement(runs: dict[str, TrendRun]) -> CriterionCheck:
    """At l=1 the two agents coincide: the gap must sit within the seed spread."""
    full, topk = runs["full-l1"], runs["topk-l1"]
    gap = abs(full.final - topk.final)
    noise = max(full.seed_std, topk.seed_std)
    return CriterionCheck(
        "full slate and top-K agree at l=1",
        gap <= noise + 1e-9 * max(1.0, abs(full.final)),
        f"gap {gap:.4f}, seed std {noise:.4f}",
    )


def check_neighbour_fraction(
    runs: dict[str, TrendRun], ratio: float = NEIGHBOUR_RATIO,
) -> CriterionCheck:
    auto, every = runs["dpgknn-kauto"], runs["dpgknn-kall"]
    return CriterionCheck(
        f"DPG+kNN with 10% of candidates >= {ratio:g} x all candidates",
        auto.final >= ratio * every.final,
        f"{auto.final:.4f} vs {every.final:.4f}",
    )


def check_risk_seeking(
    runs: dict[str, TrendRun], factor: float = RISK_FACTOR, exponents: Iterable[float] = (2.0, 4.0),
) -> CriterionCheck:
    """Some alpha in exponents has a seed majority at >= factor x the alpha=1 plateau."""
    plateau = runs["chain-alpha1"].final
    details = []
    passed = False
    for alpha in exponents:
        run = runs.get(f"chain-alpha{alpha:g}")
        if run is None:
            continue
        wins = sum(v >= factor * plateau for v in run.per_seed.values())
        passed = passed or 2 * wins > len(run.per_seed)
        details.append(f"alpha={alpha:g} {wins}/{len(run.per_seed)} seeds")
    return CriterionCheck(
        f"risk seeking >= {factor:g} x the alpha=1 plateau",
        passed,
        f"plateau {plateau:.4f}; " + ", ".join(details),
    )


def evaluate_trends(runs: dict[str, TrendRun]) -> list[CriterionCheck]:
    """Every check whose runs are present."""
    checks = []
    if "full-l10" in runs and "topk-l10" in runs:
        checks.append(check_full_beats_top_k(runs))
    if "full-l1" in runs and "topk-l1" in runs:
        checks.append(check_single_slot_agreement(runs))
    if "dpgknn-kauto" in runs and "dpgknn-kall" in runs:
        checks.append(check_neighbour_fraction(runs))
    if "chain-alpha1" in runs:
        checks.append(check_risk_seeking(runs))
    return checks
