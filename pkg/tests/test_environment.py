from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.stats import chisquare

from app.agents.agent import build_agent
from app.agents.config import AgentConfig
from app.core.types import END_STATE, FAIL
from app.env.execution import execution_distribution
from app.env.generator import GeneratorConfig, cascade_environment, generate_environment
from app.env.simulator import (
    GraphEnvironment, is_fatal, step, wrap_fatal_failure, wrap_risk_seeking,
)
from app.env.spec import candidate_actions
from app.errors import ConfigError, DomainError, InvalidIdError
from app.worker.replica import evaluate
from tests.conftest import make_spec


# ── Execution distribution ────────────────────────────────────────────

def test_weighted_distribution_by_hand(small_spec) -> None:
    dist = execution_distribution(small_spec, 0, (1, 2))
    m1 = 1.0 / math.log2(2)
    m2 = 0.5 / math.log2(3)
    total = 0.5 + m1 + m2
    assert dist.prob(1) == pytest.approx(m1 / total)
    assert dist.prob(2) == pytest.approx(m2 / total)
    assert dist.fail_probability == pytest.approx(0.5 / total)


def test_duplicates_keep_the_earliest_slot(small_spec) -> None:
    dist = execution_distribution(small_spec, 0, (1, 1))
    assert dist.entries == ((1, pytest.approx(1.0 / 1.5)),)
    assert dist.fail_probability == pytest.approx(0.5 / 1.5)


def test_out_of_candidate_actions_carry_no_mass(small_spec) -> None:
    dist = execution_distribution(small_spec, 2, (1, 2))
    assert dist.entries == ()
    assert dist.fail_probability == 1.0


def test_empty_slate_puts_all_mass_on_fail(small_spec) -> None:
    assert execution_distribution(small_spec, 1, ()).fail_probability == 1.0


def test_multiply_discount_switch() -> None:
    spec = make_spec(discount="multiply")
    dist = execution_distribution(spec, 0, (1, 2))
    m2 = 0.5 * math.log2(3)
    assert dist.prob(2) == pytest.approx(m2 / (0.5 + 1.0 + m2))


def test_distribution_rejects_end_state_and_bad_ids(small_spec) -> None:
    with pytest.raises(DomainError):
        execution_distribution(small_spec, END_STATE, (1,))
    with pytest.raises(InvalidIdError):
        execution_distribution(small_spec, 0, (5,))


def test_distribution_sums_to_one_on_fuzzed_slates() -> None:
    rng = np.random.default_rng(7)
    cfg = GeneratorConfig(n_states=40, feature_dim=4, slate_size=4, max_out_degree=12, seed=7)
    spec = generate_environment(cfg, rng)
    for _ in range(10_000):
        s = int(rng.integers(spec.n_states))
        length = int(rng.integers(0, 7))
        if rng.random() < 0.5:
            slate = tuple(int(a) for a in rng.integers(0, spec.n_states, size=length))
        else:
            cands = candidate_actions(spec, s)
            slate = tuple(int(a) for a in rng.choice(cands, size=length))
        assert abs(execution_distribution(spec, s, slate).total() - 1.0) <= 1e-12


def test_cascade_probabilities_by_hand() -> None:
    spec = make_spec(
        execution_model="cascade",
        edges=(((1, 0.6), (2, 0.9)), ((0, 1.0), (2, 0.3)), ((0, 0.25),)),
    )
    dist = execution_distribution(spec, 0, (1, 2))
    q1, q2 = 0.6, 0.9 / math.log2(3)
    assert dist.prob(1) == pytest.approx(q1)
    assert dist.prob(2) == pytest.approx((1 - q1) * q2)
    assert dist.fail_probability == pytest.approx((1 - q1) * (1 - q2))


# ── Simulator ─────────────────────────────────────────────────────────

def test_step_frequencies_pass_chi_square(small_spec) -> None:
    rng = np.random.default_rng(2024)
    env = GraphEnvironment(small_spec)
    n = 100_000
    counts = {1: 0, 2: 0, FAIL: 0}
    for _ in range(n):
        counts[env.step(0, (1, 2), rng).executed] += 1
    dist = execution_distribution(small_spec, 0, (1, 2))
    observed = [counts[1], counts[2], counts[FAIL]]
    expected = [n * dist.prob(1), n * dist.prob(2), n * dist.fail_probability]
    assert chisquare(observed, expected).pvalue > 0.01


def test_fail_jumps_uniformly_in_raw_environment(small_spec) -> None:
    rng = np.random.default_rng(5)
    env = GraphEnvironment(small_spec)
    nexts = []
    while len(nexts) < 30_000:
        rec = env.step(2, (1,), rng)
        assert rec.failed
        assert rec.reward == small_spec.rewards[rec.next_state]
        nexts.append(rec.next_state)
    observed = np.bincount(nexts, minlength=3)
    assert chisquare(observed).pvalue > 0.01


def test_step_rejects_end_state_and_empty_slate(small_spec, rng) -> None:
    with pytest.raises(DomainError):
        step(small_spec, END_STATE, (1,), rng)
    with pytest.raises(DomainError):
        step(small_spec, 0, (), rng)


def test_reset_uses_start_state_when_set(rng) -> None:
    spec = make_spec(start_state=2)
    assert GraphEnvironment(spec).reset(rng) == 2
    starts = {GraphEnvironment(make_spec()).reset(rng) for _ in range(200)}
    assert starts == {0, 1, 2}


def test_fatal_failure_wrapper_ends_episode_on_fail(small_spec) -> None:
    rng = np.random.default_rng(11)
    env = wrap_fatal_failure(small_spec)
    assert is_fatal(env)
    fails = 0
    for _ in range(5_000):
        rec = env.step(0, (1, 2), rng)
        if rec.failed:
            fails += 1
            assert rec.terminal and rec.reward == 0.0 and rec.next_state == END_STATE
    assert fails > 0


def test_wrapped_and_raw_share_the_first_draws(small_spec) -> None:
    for seed in range(50):
        raw = GraphEnvironment(small_spec).step(1, (2, 0), np.random.default_rng(seed))
        fatal = wrap_fatal_failure(small_spec).step(1, (2, 0), np.random.default_rng(seed))
        assert raw.executed == fatal.executed
        if not raw.failed:
            assert raw == fatal


def test_fatal_returns_never_exceed_raw_returns_pathwise(small_spec) -> None:
    agent = build_agent(AgentConfig(agent_kind="myopic"), small_spec, np.random.default_rng(0))
    raw, fatal = GraphEnvironment(small_spec), wrap_fatal_failure(small_spec)
    shortened = 0
    for seed in range(300):
        r = evaluate(agent, raw, 1, np.random.default_rng(seed), max_episode_steps=40)[0]
        f = evaluate(agent, fatal, 1, np.random.default_rng(seed), max_episode_steps=40)[0]
        assert f <= r
        shortened += f < r
    assert shortened > 0


def test_transitions_are_exact_distributions(small_spec) -> None:
    for env in (GraphEnvironment(small_spec), wrap_fatal_failure(small_spec)):
        for s in range(3):
            outcomes = env.transitions(s, (1, 2))
            assert sum(o.prob for o in outcomes) == pytest.approx(1.0, abs=1e-12)
            assert all(o.prob > 0 for o in outcomes)


def test_fatal_transitions_collapse_fail_mass(small_spec) -> None:
    outcomes = wrap_fatal_failure(small_spec).transitions(0, (1, 2))
    fail = [o for o in outcomes if o.executed == FAIL]
    assert len(fail) == 1
    assert fail[0].next_state == END_STATE and fail[0].terminal and fail[0].reward == 0.0
    assert fail[0].prob == pytest.approx(execution_distribution(small_spec, 0, (1, 2)).fail_probability)


def test_risk_seeking_transforms_rewards_only(small_spec) -> None:
    base = wrap_fatal_failure(small_spec)
    risky = wrap_risk_seeking(base, 2.0)
    for o_base, o_risky in zip(base.transitions(0, (2, 1)), risky.transitions(0, (2, 1))):
        assert o_risky.prob == o_base.prob
        assert o_risky.reward == pytest.approx(o_base.reward ** 2)
    rec_base = base.step(0, (2, 1), np.random.default_rng(3))
    rec_risky = risky.step(0, (2, 1), np.random.default_rng(3))
    assert rec_risky.reward == pytest.approx(rec_base.reward ** 2)
    assert is_fatal(risky)


def test_risk_seeking_requires_positive_alpha(small_spec) -> None:
    with pytest.raises(ConfigError):
        wrap_risk_seeking(small_spec, 0.0)


def test_cascade_toys_are_valid(rng) -> None:
    for _ in range(10):
        spec = cascade_environment(rng, n_states=5, slate_size=3)
        assert spec.execution_model == "cascade"
        for s in range(spec.n_states):
            for slate in [(), tuple(candidate_actions(spec, s))[:3]]:
                assert execution_distribution(spec, s, slate).total() == pytest.approx(1.0)
