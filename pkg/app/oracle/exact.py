"""Exact value iteration over enumerated slates for small slate-MDPs."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from tqdm import tqdm

from app.config import ORACLE_MAX_PAIRS, ORACLE_MAX_SWEEPS, ORACLE_TOLERANCE, SHOW_PROGRESS
from app.core.types import Slate, StateId, as_slate, is_end_state
from app.env.simulator import SlateEnvironment, as_environment
from app.env.spec import EnvironmentSpec, candidate_actions
from app.errors import OracleRefusal

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-12


def enumerate_slates(candidates: Sequence[int], slate_size: int) -> Iterator[Slate]:
    """Every ordered slate over the candidates, in lexicographic order."""
    return itertools.product(sorted(int(a) for a in candidates), repeat=slate_size)


def count_pairs(spec: EnvironmentSpec, slate_size: int) -> int:
    return sum(len(candidate_actions(spec, s)) ** slate_size for s in range(spec.n_states))


@dataclass
class ExactSolution:
    """Q* over every enumerated (state, slate) pair and V* per state."""
    env: SlateEnvironment
    gamma: float
    slate_size: int
    q_table: dict[tuple[StateId, Slate], float]
    v_table: dict[StateId, float]
    sweeps: int = 0
    _lookahead: dict[tuple[StateId, Slate], float] = field(default_factory=dict, repr=False)

    def value(self, s: StateId) -> float:
        if is_end_state(s):
            return 0.0
        return self.v_table[s]

    def q(self, s: StateId, slate: Sequence[int]) -> float:
        """Q*(s, slate) for any slate length; shorter prefixes use one Bellman lookahead."""
        key = (s, as_slate(slate))
        if key in self.q_table:
            return self.q_table[key]
        if key not in self._lookahead:
            total = 0.0
            for o in self.env.transitions(s, key[1]):
                total += o.prob * o.reward
                if not o.terminal:
                    total += o.prob * self.gamma * self.value(o.next_state)
            self._lookahead[key] = total
        return self._lookahead[key]

    def slates(self, s: StateId) -> Iterator[Slate]:
        return enumerate_slates(candidate_actions(self.env.spec, s), self.slate_size)


class ExactScorer:
    """SlateScorer backed by an exact solution; counts evaluations."""

    def __init__(self, solution: ExactSolution):
        self.solution = solution
        self.calls = 0

    def values(self, s: StateId, slates: Sequence[Slate]) -> np.ndarray:
        self.calls += len(slates)
        return np.array([self.solution.q(s, slate) for slate in slates])


def exact_q(
    env: EnvironmentSpec | SlateEnvironment,
    gamma: float,
    tolerance: float = ORACLE_TOLERANCE,
    slate_size: int | None = None,
    max_pairs: int = ORACLE_MAX_PAIRS,
) -> ExactSolution:
    """Value iteration until the sup-norm change of Q drops below tolerance."""
    env = as_environment(env)
    spec = env.spec
    size = slate_size or spec.slate_size
    n_pairs = count_pairs(spec, size)
    if n_pairs > max_pairs:
        raise OracleRefusal(f"{n_pairs} (state, slate) pairs exceed the limit of {max_pairs}")

    keys: list[tuple[StateId, Slate]] = []
    offsets: list[int] = []
    rewards: list[float] = []
    rows: list[int] = []
    cols: list[int] = []
    probs: list[float] = []
    for s in range(spec.n_states):
        offsets.append(len(keys))
        for slate in enumerate_slates(candidate_actions(spec, s), size):
            row = len(keys)
            keys.append((s, slate))
            r = 0.0
            for o in env.transitions(s, slate):
                r += o.prob * o.reward
                if not o.terminal and not is_end_state(o.next_state):
                    rows.append(row)
                    cols.append(o.next_state)
                    probs.append(o.prob)
            rewards.append(r)

    logger.info(f"Exact Q: {spec.n_states} states, {len(keys)} slates, gamma={gamma}")
    reward = np.array(rewards)
    row_idx = np.array(rows, dtype=np.int64)
    col_idx = np.array(cols, dtype=np.int64)
    prob = np.array(probs)
    starts = np.array(offsets, dtype=np.int64)

    q = reward.copy()
    sweeps = 0
    converged = False
    for sweeps in tqdm(range(1, ORACLE_MAX_SWEEPS + 1), desc="value iteration", disable=not SHOW_PROGRESS):
        v = np.maximum.reduceat(q, starts)
        backup = np.bincount(row_idx, weights=prob * v[col_idx], minlength=len(q))
        q_next = reward + gamma * backup
        delta = float(np.max(np.abs(q_next - q))) if len(q) else 0.0
        q = q_next
        if delta < tolerance:
            converged = True
            break
    if not converged:
        raise OracleRefusal(f"value iteration did not converge within {ORACLE_MAX_SWEEPS} sweeps")

    v = np.maximum.reduceat(q, starts)
    logger.info(f"Exact Q converged after {sweeps} sweeps")
    return ExactSolution(
        env=env,
        gamma=gamma,
        slate_size=size,
        q_table={key: float(val) for key, val in zip(keys, q)},
        v_table={s: float(v[s]) for s in range(spec.n_states)},
        sweeps=sweeps,
    )


def optimal_slate(
    env: EnvironmentSpec | SlateEnvironment, solution: ExactSolution, s: StateId,
) -> tuple[Slate, float]:
    """Exhaustive argmax over the state's slates; ties go to the lexicographically smallest."""
    best: Slate | None = None
    best_value = -np.inf
    for slate in enumerate_slates(candidate_actions(as_environment(env).spec, s), solution.slate_size):
        val = solution.q_table[(s, slate)]
        if best is None or val > best_value + TIE_TOLERANCE:
            best, best_value = slate, val
    return best, float(best_value)


def dump_solution(solution: ExactSolution) -> str:
    """Tab-separated listing: state, slate, Q; then state, V."""
    lines = ["# state\tslate\tq"]
    for (s, slate), val in sorted(solution.q_table.items()):
        lines.append(f"{s}\t{','.join(map(str, slate))}\t{val:.12g}")
    lines.append("# state\tv")
    for s, val in sorted(solution.v_table.items()):
        lines.append(f"{s}\t{val:.12g}")
    return "\n".join(lines) + "\n"
