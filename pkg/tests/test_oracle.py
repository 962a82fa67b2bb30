from __future__ import annotations

import numpy as np
import pytest

from app.agents.selection import ImmediateRewardScorer
from app.env.generator import cascade_environment, chain_environment
from app.env.simulator import GraphEnvironment, wrap_fatal_failure
from app.errors import OracleRefusal
from app.oracle.exact import count_pairs, dump_solution, enumerate_slates, exact_q, optimal_slate
from app.oracle.properties import (
    GREEDY_FACTOR, certify, check_fatal_failure, check_greedy_bound, check_sequential_presentation,
    check_slate_restriction, check_submodular_monotone,
)
from tests.conftest import make_spec


def _bellman_residual(solution) -> float:
    worst = 0.0
    for (s, slate), q in solution.q_table.items():
        backup = 0.0
        for o in solution.env.transitions(s, slate):
            backup += o.prob * o.reward
            if not o.terminal:
                backup += o.prob * solution.gamma * solution.value(o.next_state)
        worst = max(worst, abs(backup - q))
    return worst


# ── Exact values ──────────────────────────────────────────────────────

def test_enumeration_and_pair_counts(small_spec) -> None:
    assert list(enumerate_slates([2, 1], 2)) == [(1, 1), (1, 2), (2, 1), (2, 2)]
    # candidates per state: 2, 2, 1
    assert count_pairs(small_spec, 2) == 4 + 4 + 1


def test_zero_rewards_give_zero_values() -> None:
    spec = make_spec(rewards=np.zeros(3))
    solution = exact_q(spec, 0.9)
    assert all(q == 0.0 for q in solution.q_table.values())
    assert all(v == 0.0 for v in solution.v_table.values())


def test_no_discount_gives_expected_immediate_reward(small_spec) -> None:
    solution = exact_q(small_spec, 0.0)
    scorer = ImmediateRewardScorer(small_spec)
    for (s, slate), q in solution.q_table.items():
        assert q == pytest.approx(scorer.values(s, [slate])[0], abs=1e-12)


def test_chain_value_matches_the_closed_form() -> None:
    gamma, length = 0.9, 5
    spec = chain_environment(length, 1.0, 100.0)
    solution = exact_q(wrap_fatal_failure(spec), gamma)
    q = 1.0 / (1.0 + spec.fail_weight)
    step = q * gamma * (1.0 - spec.p_end_exec)
    chain = step ** (length - 1) * q * 100.0
    lure = q * 1.0
    assert solution.value(0) == pytest.approx(max(chain, lure), rel=1e-8)
    assert solution.q(0, (length + 1,)) == pytest.approx(lure, rel=1e-8)


def test_solution_satisfies_the_bellman_equation(small_spec) -> None:
    for env in (GraphEnvironment(small_spec), wrap_fatal_failure(small_spec)):
        solution = exact_q(env, 0.8)
        assert _bellman_residual(solution) < 1e-8
        assert solution.sweeps >= 1


def test_prefix_values_use_one_step_lookahead(small_spec) -> None:
    solution = exact_q(wrap_fatal_failure(small_spec), 0.8)
    assert solution.q(0, ()) == 0.0
    expected = 0.0
    for o in solution.env.transitions(0, (2,)):
        expected += o.prob * o.reward
        if not o.terminal:
            expected += o.prob * 0.8 * solution.value(o.next_state)
    assert solution.q(0, (2,)) == pytest.approx(expected, abs=1e-12)
    assert (0, (2,)) not in solution.q_table


def test_oracle_refuses_large_instances(small_spec) -> None:
    with pytest.raises(OracleRefusal):
        exact_q(small_spec, 0.9, max_pairs=5)


def test_optimal_slate_tie_rule() -> None:
    spec = make_spec(rewards=np.zeros(3))
    solution = exact_q(spec, 0.5)
    assert optimal_slate(spec, solution, 1) == ((0, 0), 0.0)


def test_optimal_slate_is_the_maximum(small_spec) -> None:
    solution = exact_q(wrap_fatal_failure(small_spec), 0.9)
    for s in range(3):
        slate, value = optimal_slate(small_spec, solution, s)
        assert value == pytest.approx(solution.value(s))
        assert solution.q_table[(s, slate)] == value


def test_dump_solution_lists_every_pair(small_spec) -> None:
    solution = exact_q(small_spec, 0.5)
    text = dump_solution(solution)
    assert text.startswith("# state\tslate\tq\n")
    assert "0\t1,2\t" in text
    assert len(text.strip().splitlines()) == 2 + len(solution.q_table) + len(solution.v_table)


# ── Certification ─────────────────────────────────────────────────────

def test_weighted_model_has_monotone_damage_but_not_truncation(small_spec) -> None:
    report = check_sequential_presentation(small_spec)
    assert report.get("sequential presentation: monotone damage").passed
    assert not report.get("sequential presentation: truncation").passed


def test_cascade_toys_are_monotone_submodular_and_greedy_is_bounded() -> None:
    rng = np.random.default_rng(17)
    for _ in range(20):
        n = int(rng.integers(3, 7))
        spec = cascade_environment(rng, n_states=n, slate_size=int(rng.integers(1, 4)))
        assert check_sequential_presentation(spec).passed
        solution = exact_q(wrap_fatal_failure(spec), 0.9)
        report = check_submodular_monotone(solution)
        assert report.get("monotone").violations == 0
        assert report.get("submodular").violations == 0
        greedy = check_greedy_bound(solution)
        assert greedy.passed and greedy.checked == n


def test_greedy_factor() -> None:
    assert GREEDY_FACTOR == pytest.approx(0.6321205588)


def test_fatal_failure_check_separates_raw_and_wrapped(small_spec) -> None:
    rng = np.random.default_rng(3)
    wrapped = check_fatal_failure(wrap_fatal_failure(small_spec), 2_000, rng)
    assert wrapped.passed and wrapped.checked > 0
    raw = check_fatal_failure(small_spec, 2_000, rng)
    assert raw.violations == raw.checked > 0


def test_slate_restricted_sum_holds_under_fatal_failure(small_spec) -> None:
    assert check_slate_restriction(exact_q(wrap_fatal_failure(small_spec), 0.9)).passed
    assert not check_slate_restriction(exact_q(small_spec, 0.9)).passed


def test_certify_cascade_instance() -> None:
    rng = np.random.default_rng(5)
    spec = cascade_environment(rng, n_states=4, slate_size=2)
    report = certify(spec, 0.9, np.random.default_rng(0), samples=2_000)
    names = [p.name for p in report.properties]
    assert "fatal failure (raw environment)" in names
    for name in names:
        if name != "fatal failure (raw environment)":
            assert report.get(name).passed, report.get(name).to_text()
    assert "greedy bound" in report.to_text()
