from __future__ import annotations

import pytest

from app.env.generator import chain_environment
from app.env.io import save_environment
from app.store import runs as store
from app.worker.trends import (
    TrendRun, check_full_beats_top_k, check_neighbour_fraction, check_risk_seeking,
    check_single_slot_agreement, evaluate_trends, full_vs_top_k, neighbour_counts, risk_exponents,
)

SMALL = {
    "generator": {"n_states": 12, "feature_dim": 3, "slate_size": 4, "max_out_degree": 4, "seed": 1},
    "train_steps": 120,
    "eval_every": 60,
    "eval_episodes": 5,
    "seeds": [0, 1],
    "window": 2,
    "max_episode_steps": 30,
    "save_checkpoints": False,
}

DESK = {
    "generator": {"n_states": 200, "feature_dim": 16, "slate_size": 10, "seed": 0},
    "train_steps": 50_000,
    "eval_every": 5_000,
    "eval_episodes": 100,
    "seeds": [0, 1, 2, 3, 4, 5],
    "save_checkpoints": False,
}


def _run(name: str, final: float, per_seed: dict[int, float] | None = None, std: float = 0.0) -> TrendRun:
    return TrendRun(name, final, per_seed or {0: final}, std)


# ── Checks ────────────────────────────────────────────────────────────

def test_full_over_top_k_margin() -> None:
    runs = {"full-l10": _run("full-l10", 11.0), "topk-l10": _run("topk-l10", 10.0)}
    assert check_full_beats_top_k(runs).passed
    runs["full-l10"] = _run("full-l10", 10.9)
    check = check_full_beats_top_k(runs)
    assert not check.passed and check.line().startswith("FAIL")


def test_single_slot_agreement_uses_the_seed_spread() -> None:
    runs = {"full-l1": _run("full-l1", 5.0, std=0.5), "topk-l1": _run("topk-l1", 5.4, std=0.3)}
    assert check_single_slot_agreement(runs).passed
    runs["topk-l1"] = _run("topk-l1", 6.0, std=0.3)
    assert not check_single_slot_agreement(runs).passed


def test_neighbour_fraction_ratio() -> None:
    runs = {"dpgknn-kall": _run("dpgknn-kall", 10.0), "dpgknn-kauto": _run("dpgknn-kauto", 9.0)}
    assert check_neighbour_fraction(runs).passed
    runs["dpgknn-kauto"] = _run("dpgknn-kauto", 8.9)
    assert not check_neighbour_fraction(runs).passed


def test_risk_seeking_needs_a_seed_majority() -> None:
    plateau = _run("chain-alpha1", 2.0)
    two_of_three = _run("chain-alpha2", 0.0, {0: 12.0, 1: 10.0, 2: 1.0})
    one_of_three = _run("chain-alpha4", 0.0, {0: 12.0, 1: 9.0, 2: 1.0})
    assert check_risk_seeking({"chain-alpha1": plateau, "chain-alpha2": two_of_three}).passed
    assert not check_risk_seeking({"chain-alpha1": plateau, "chain-alpha4": one_of_three}).passed
    both = {"chain-alpha1": plateau, "chain-alpha2": two_of_three, "chain-alpha4": one_of_three}
    assert check_risk_seeking(both).passed


def test_evaluate_trends_skips_missing_comparisons() -> None:
    assert evaluate_trends({"full-l5": _run("full-l5", 1.0), "topk-l5": _run("topk-l5", 1.0)}) == []
    names = [c.name for c in evaluate_trends({"chain-alpha1": _run("chain-alpha1", 1.0)})]
    assert names == ["risk seeking >= 5 x the alpha=1 plateau"]


# ── Reduced-scale reproductions ───────────────────────────────────────

def test_single_slot_full_and_top_k_are_the_same_agent(tmp_path) -> None:
    agent = {"q_hidden": [6], "batch_size": 4, "buffer_capacity": 100}
    runs = full_vs_top_k(SMALL, tmp_path, sizes=(1,), agent=agent)
    full = (tmp_path / "full-l1" / store.METRICS).read_bytes()
    topk = (tmp_path / "topk-l1" / store.METRICS).read_bytes()
    assert full == topk
    assert runs["full-l1"].final == runs["topk-l1"].final
    assert runs["full-l1"].per_seed == runs["topk-l1"].per_seed
    assert check_single_slot_agreement(runs).passed


@pytest.mark.slow
def test_risk_seeking_leaves_the_myopic_plateau(tmp_path) -> None:
    # With discount 0.2 the lure is the risk-neutral optimum at the start state;
    # squaring the rewards makes the far goal worth the walk.
    env_path = save_environment(chain_environment(5, 1.0, 100.0, fail_weight=0.01), tmp_path / "chain.json")
    base = {
        "env_path": str(env_path),
        "train_steps": 30_000,
        "eval_every": 30_000,
        "eval_episodes": 300,
        "seeds": [0, 1, 2],
        "window": 1,
        "save_checkpoints": False,
    }
    # one-hot features, linear head: Q(s, a) depends on a alone here
    agent = {
        "q_hidden": [], "eta": 0.05, "gamma": 0.2, "epsilon": 0.2,
        "batch_size": 1, "buffer_capacity": 1, "tau": 1.0,
    }
    runs = risk_exponents(base, alphas=(1.0, 2.0, 4.0), agent=agent, workers=3)
    assert runs["chain-alpha1"].final < 20.0
    check = check_risk_seeking(runs)
    assert check.passed, check.detail


@pytest.mark.slow
@pytest.mark.trend
def test_full_slate_beats_top_k_at_desk_scale(tmp_path) -> None:
    runs = full_vs_top_k(DESK, tmp_path, workers=6, sizes=(10, 1))
    for check in (check_full_beats_top_k(runs), check_single_slot_agreement(runs)):
        assert check.passed, check.detail


@pytest.mark.slow
@pytest.mark.trend
def test_ten_percent_neighbours_match_all_candidates_at_desk_scale(tmp_path) -> None:
    runs = neighbour_counts(DESK, tmp_path, workers=6, counts=("all", None))
    check = check_neighbour_fraction(runs)
    assert check.passed, check.detail
