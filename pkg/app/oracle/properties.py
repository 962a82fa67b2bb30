"""Exhaustive and sampled certification of slate-MDP structure.

Sequential presentation and fatal failure are properties of the environment;
monotonicity, submodularity and the greedy bound are properties of an exact
state-slate value function.
"""

from __future__ import annotations

import itertools
import logging
import math

import numpy as np

from app.agents.selection import greedy_slate, random_slate
from app.config import ORACLE_MAX_PAIRS, ORACLE_TOLERANCE
from app.core.types import Slate, is_end_state
from app.env.execution import ExecutionDistribution, execution_distribution
from app.env.simulator import SlateEnvironment, as_environment, wrap_fatal_failure
from app.env.spec import EnvironmentSpec, candidate_actions
from app.errors import OracleRefusal
from app.oracle.exact import ExactScorer, ExactSolution, exact_q, optimal_slate
from app.oracle.report import CertificationReport, PropertyReport

logger = logging.getLogger(__name__)

CHECK_TOLERANCE = 1e-9
GREEDY_FACTOR = 1.0 - 1.0 / math.e


def _guard(spec: EnvironmentSpec, slate_size: int, max_checks: int) -> None:
    n = sum(
        len(candidate_actions(spec, s)) ** m
        for s in range(spec.n_states)
        for m in range(1, slate_size + 1)
    )
    if n > max_checks:
        raise OracleRefusal(f"{n} slates to inspect exceed the limit of {max_checks}")


def check_sequential_presentation(
    env: EnvironmentSpec | SlateEnvironment,
    tolerance: float = CHECK_TOLERANCE,
    max_checks: int = ORACLE_MAX_PAIRS,
) -> CertificationReport:
    """Check both sequential-presentation conditions for every slate up to length l.

    truncation: Pr(a | s, p a suffix) == Pr(a | s, p a)
    monotone damage: Pr(a | s, p b a) <= Pr(a | s, p a)
    """
    spec = as_environment(env).spec
    _guard(spec, spec.slate_size, max_checks)
    truncation = PropertyReport("sequential presentation: truncation")
    damage = PropertyReport("sequential presentation: monotone damage")

    for s in range(spec.n_states):
        cache: dict[Slate, ExecutionDistribution] = {}

        def dist(slate: Slate) -> ExecutionDistribution:
            if slate not in cache:
                cache[slate] = execution_distribution(spec, s, slate)
            return cache[slate]

        cands = candidate_actions(spec, s)
        for m in range(1, spec.slate_size + 1):
            for slate in itertools.product(cands, repeat=m):
                full = dist(slate)
                for i in range(m - 1):
                    a = slate[i]
                    p_full, p_cut = full.prob(a), dist(slate[: i + 1]).prob(a)
                    truncation.record(
                        abs(p_full - p_cut) <= tolerance,
                        f"s={s} slate={slate} a={a}: {p_full:.6g} vs prefix {p_cut:.6g}",
                    )
                if m >= 2:
                    a = slate[-1]
                    later = full.prob(a)
                    earlier = dist(slate[:-2] + (a,)).prob(a)
                    damage.record(
                        later <= earlier + tolerance,
                        f"s={s} slate={slate} a={a}: {later:.6g} > {earlier:.6g}",
                    )

    logger.info(
        f"Sequential presentation: truncation {truncation.violations}/{truncation.checked}, "
        f"damage {damage.violations}/{damage.checked} violations"
    )
    return CertificationReport("sequential presentation", [truncation, damage])


def check_submodular_monotone(
    solution: ExactSolution,
    env: EnvironmentSpec | SlateEnvironment | None = None,
    tolerance: float = CHECK_TOLERANCE,
    max_checks: int = ORACLE_MAX_PAIRS,
) -> CertificationReport:
    """Monotonicity and diminishing returns of f(prefix) = Q(s, prefix) over all prefixes."""
    spec = as_environment(env).spec if env is not None else solution.env.spec
    _guard(spec, solution.slate_size, max_checks)
    monotone = PropertyReport("monotone")
    submodular = PropertyReport("submodular")
    f = solution.q

    for s in range(spec.n_states):
        cands = candidate_actions(spec, s)
        for i in range(solution.slate_size):
            for prefix in itertools.product(cands, repeat=i):
                base = f(s, prefix)
                for a in cands:
                    gain = f(s, prefix + (a,)) - base
                    monotone.record(
                        gain >= -tolerance,
                        f"s={s} prefix={prefix} a={a}: gain {gain:.6g}",
                    )
                    if i >= 1:
                        shorter = prefix[:-1]
                        earlier_gain = f(s, shorter + (a,)) - f(s, shorter)
                        submodular.record(
                            gain <= earlier_gain + tolerance,
                            f"s={s} prefix={prefix} a={a}: gain {gain:.6g} > {earlier_gain:.6g}",
                        )

    logger.info(
        f"Monotone {monotone.violations}/{monotone.checked}, "
        f"submodular {submodular.violations}/{submodular.checked} violations"
    )
    return CertificationReport("monotone and submodular", [monotone, submodular])


def check_fatal_failure(
    env: EnvironmentSpec | SlateEnvironment, samples: int, rng: np.random.Generator,
) -> PropertyReport:
    """Sample transitions; every FAIL must end the episode at the end state with reward 0."""
    env = as_environment(env)
    spec = env.spec
    report = PropertyReport("fatal failure")
    failures = 0
    for _ in range(samples):
        s = int(rng.integers(spec.n_states))
        slate = random_slate(candidate_actions(spec, s), spec.slate_size, rng)
        rec = env.step(s, slate, rng)
        if not rec.failed:
            continue
        failures += 1
        ok = rec.terminal and rec.reward == 0.0 and is_end_state(rec.next_state)
        report.record(
            ok,
            f"s={s} slate={slate}: reward {rec.reward:.6g}, next {rec.next_state}, terminal {rec.terminal}",
        )
    report.note = f"{failures} FAIL outcomes in {samples} samples"
    return report


def check_slate_restriction(
    solution: ExactSolution, tolerance: float = CHECK_TOLERANCE,
) -> PropertyReport:
    """Q(s, slate) computed only from outcomes that execute a slate action equals the full Q."""
    report = PropertyReport("slate-restricted sum")
    for (s, slate), q in solution.q_table.items():
        members = set(slate)
        restricted = 0.0
        for o in solution.env.transitions(s, slate):
            if o.executed not in members:
                continue
            restricted += o.prob * o.reward
            if not o.terminal:
                restricted += o.prob * solution.gamma * solution.value(o.next_state)
        report.record(
            abs(restricted - q) <= tolerance,
            f"s={s} slate={slate}: restricted {restricted:.6g} vs {q:.6g}",
        )
    return report


def check_greedy_bound(
    solution: ExactSolution, tolerance: float = CHECK_TOLERANCE,
) -> PropertyReport:
    """Sequential greedy on the exact Q reaches (1 - 1/e) of the best slate at every state."""
    report = PropertyReport("greedy bound")
    spec = solution.env.spec
    worst = 1.0
    for s in range(spec.n_states):
        cands = candidate_actions(spec, s)
        slate = greedy_slate(ExactScorer(solution), s, cands, solution.slate_size)
        value = solution.q(s, slate)
        best, opt = optimal_slate(solution.env, solution, s)
        if opt > 0:
            worst = min(worst, value / opt)
        report.record(
            value >= GREEDY_FACTOR * opt - tolerance,
            f"s={s} greedy={slate} ({value:.6g}) optimal={best} ({opt:.6g})",
        )
    report.note = f"worst greedy/optimal ratio {worst:.6f}"
    return report


def certify(
    spec: EnvironmentSpec,
    gamma: float,
    rng: np.random.Generator,
    tolerance: float = CHECK_TOLERANCE,
    samples: int = 10_000,
) -> CertificationReport:
    """Every checkable property of an environment and of its fatal-failure variant."""
    raw = as_environment(spec)
    fatal = wrap_fatal_failure(raw)
    report = CertificationReport(f"certification (N={spec.n_states}, l={spec.slate_size}, gamma={gamma})")

    report.properties.extend(check_sequential_presentation(raw, tolerance).properties)
    raw_fatal = check_fatal_failure(raw, samples, rng)
    raw_fatal.name = "fatal failure (raw environment)"
    report.properties.append(raw_fatal)
    wrapped_fatal = check_fatal_failure(fatal, samples, rng)
    wrapped_fatal.name = "fatal failure (wrapped environment)"
    report.properties.append(wrapped_fatal)

    solution = exact_q(fatal, gamma, min(tolerance, ORACLE_TOLERANCE))
    report.properties.extend(check_submodular_monotone(solution, tolerance=tolerance).properties)
    report.properties.append(check_slate_restriction(solution, tolerance))
    report.properties.append(check_greedy_bound(solution, tolerance))
    logger.info(f"Certification finished: {'all pass' if report.passed else 'violations found'}")
    return report
