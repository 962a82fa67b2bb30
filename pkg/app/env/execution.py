"""Action-execution model: which slate element (if any) the environment executes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from app.core.types import FAIL, ActionId, StateId, is_end_state
from app.env.spec import EnvironmentSpec
from app.errors import DomainError, InvalidIdError


@dataclass(frozen=True)
class ExecutionDistribution:
    """Pr(a | s, slate) over distinct slate actions with positive mass, plus Pr(FAIL)."""
    entries: tuple[tuple[ActionId, float], ...]
    fail_probability: float

    def prob(self, a: ActionId) -> float:
        if a == FAIL:
            return self.fail_probability
        for action, p in self.entries:
            if action == a:
                return p
        return 0.0

    def outcomes(self) -> list[tuple[ActionId, float]]:
        """Entries followed by (FAIL, fail_probability); the sampling order."""
        return list(self.entries) + [(FAIL, self.fail_probability)]

    def total(self) -> float:
        return self.fail_probability + sum(p for _, p in self.entries)


def dedup(slate: Sequence[int]) -> list[tuple[int, int]]:
    """(action, 1-based position) for the earliest occurrence of each action."""
    seen: set[int] = set()
    kept = []
    for i, a in enumerate(slate, start=1):
        if a not in seen:
            seen.add(a)
            kept.append((a, i))
    return kept


def position_factor(i: int, mode: str) -> float:
    """Information-retrieval position discount for 1-based slot i."""
    if mode == "multiply":
        return math.log2(i + 1)
    return 1.0 / math.log2(i + 1)


def execution_distribution(
    env: EnvironmentSpec, s: StateId, slate: Sequence[int],
) -> ExecutionDistribution:
    """Exact execution distribution for slate at state s.

    Slates of any length are accepted, including the empty prefix (all mass on
    FAIL). Actions outside the candidate set are legal and carry zero mass.
    """
    if is_end_state(s):
        raise DomainError("no execution distribution at the end state")
    if not 0 <= s < env.n_states:
        raise InvalidIdError(f"state {s} outside [0, {env.n_states})")
    for a in slate:
        if not 0 <= a < env.n_states:
            raise InvalidIdError(f"action {a} outside [0, {env.n_states})")

    if env.execution_model == "cascade":
        return _cascade(env, s, slate)
    return _weighted(env, s, slate)


def _weighted(env: EnvironmentSpec, s: StateId, slate: Sequence[int]) -> ExecutionDistribution:
    masses = []
    for a, i in dedup(slate):
        w = env.weight(s, a)
        if w > 0:
            masses.append((a, w * position_factor(i, env.discount)))

    total = env.fail_weight
    for _, m in masses:
        total += m
    entries = tuple((a, m / total) for a, m in masses)
    return ExecutionDistribution(entries=entries, fail_probability=env.fail_weight / total)


def _cascade(env: EnvironmentSpec, s: StateId, slate: Sequence[int]) -> ExecutionDistribution:
    # Slots are inspected in order; reaching slot i requires passing every earlier one.
    reach = 1.0
    entries = []
    for a, i in dedup(slate):
        w = env.weight(s, a)
        if w <= 0:
            continue
        if reach <= 0.0:
            break
        q = min(1.0, w * position_factor(i, env.discount))
        entries.append((a, reach * q))
        reach *= 1.0 - q
    return ExecutionDistribution(entries=tuple(entries), fail_probability=reach)
