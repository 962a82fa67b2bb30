"""Slate construction: sequential greedy, top-K and uniform random slates."""

from __future__ import annotations

from typing import Protocol, Sequence

import numpy as np

from app.core.types import Slate, StateId, slate_feature_matrix, slate_features
from app.env.execution import execution_distribution
from app.env.spec import EnvironmentSpec
from app.errors import DomainError
from app.neural.mlp import MlpNetwork


class SlateScorer(Protocol):
    """Anything that values a batch of equal-length slates at one state."""

    def values(self, s: StateId, slates: Sequence[Slate]) -> np.ndarray: ...


class NetworkScorer:
    """Q(s, slate) from a network over [state | slot features]; counts evaluations."""

    def __init__(self, net: MlpNetwork, spec: EnvironmentSpec):
        self.net = net
        self.spec = spec
        self.calls = 0

    def values(self, s: StateId, slates: Sequence[Slate]) -> np.ndarray:
        self.calls += len(slates)
        x = slate_feature_matrix(slates, s, self.spec)
        return self.net.forward(x)[:, 0]


class ImmediateRewardScorer:
    """Exact expected immediate reward under the raw environment (FAIL jumps uniformly)."""

    def __init__(self, spec: EnvironmentSpec):
        self.spec = spec
        self.mean_reward = float(np.mean(spec.rewards))
        self.calls = 0

    def values(self, s: StateId, slates: Sequence[Slate]) -> np.ndarray:
        self.calls += len(slates)
        out = np.empty(len(slates))
        for j, slate in enumerate(slates):
            dist = execution_distribution(self.spec, s, slate)
            r = dist.fail_probability * self.mean_reward
            for a, p in dist.entries:
                r += p * float(self.spec.rewards[a])
            out[j] = r
        return out


def q_value(qnet: MlpNetwork, env: EnvironmentSpec, s: StateId, slate: Sequence[int]) -> float:
    return float(qnet.forward(slate_features(slate, s, env))[0])


def greedy_slate(
    scorer: SlateScorer,
    s: StateId,
    candidates: Sequence[int],
    slate_size: int,
    restrict: Sequence[Sequence[int]] | None = None,
) -> Slate:
    """Fill slots in order; slot i is the argmax of Q(s, a_1..a_{i-1}, a, a, ..., a).

    The choice set of slot i is restrict[i] when given, else all candidates.
    Ties go to the smallest action id.
    """
    chosen: list[int] = []
    for i in range(slate_size):
        pool = restrict[i] if restrict is not None else candidates
        choices = sorted(set(int(a) for a in pool))
        if not choices:
            raise DomainError(f"slot {i + 1} has an empty choice set")
        prefix = tuple(chosen)
        slates = [prefix + (a,) * (slate_size - i) for a in choices]
        vals = scorer.values(s, slates)
        chosen.append(choices[int(np.argmax(vals))])
    return tuple(chosen)


def greedy_slates(
    net: MlpNetwork,
    spec: EnvironmentSpec,
    states: Sequence[StateId],
    choices: Sequence[Sequence[Sequence[int]]],
    slate_size: int,
) -> list[Slate]:
    """greedy_slate under a network for many states at once, one forward pass per slot.

    choices[b][i] is the choice set of slot i at states[b]; ties go to the smallest id.
    """
    n = len(states)
    if n == 0:
        return []
    state_ids = np.asarray(states, dtype=np.int64)
    chosen = np.zeros((n, slate_size), dtype=np.int64)
    for i in range(slate_size):
        pools = [np.array(sorted(set(int(a) for a in choices[b][i])), dtype=np.int64) for b in range(n)]
        sizes = np.array([len(p) for p in pools])
        if np.any(sizes == 0):
            raise DomainError(f"slot {i + 1} has an empty choice set")
        actions = np.concatenate(pools)
        owner = np.repeat(np.arange(n), sizes)
        idx = np.empty((len(actions), slate_size + 1), dtype=np.int64)
        idx[:, 0] = state_ids[owner]
        idx[:, 1:i + 1] = chosen[owner, :i]
        idx[:, i + 1:] = actions[:, None]
        vals = net.forward(spec.features[idx].reshape(len(actions), -1))[:, 0]
        starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        best = np.maximum.reduceat(vals, starts)
        hits = np.flatnonzero(vals == best[owner])
        # first hit of each segment
        _, first = np.unique(owner[hits], return_index=True)
        chosen[:, i] = actions[hits[first]]
    return [tuple(int(a) for a in row) for row in chosen]


def ranked_actions(scorer: SlateScorer, s: StateId, candidates: Sequence[int]) -> list[int]:
    """Candidates by descending single-action value, ties by ascending id."""
    if not candidates:
        raise DomainError("no candidate actions to rank")
    ids = np.array(sorted(int(a) for a in candidates), dtype=np.int64)
    vals = scorer.values(s, [(int(a),) for a in ids])
    order = np.lexsort((ids, -vals))
    return [int(a) for a in ids[order]]


def top_k_slate(scorer: SlateScorer, s: StateId, candidates: Sequence[int], slate_size: int) -> Slate:
    """The slate_size best single actions; a short ranking is cycled to fill the slate."""
    ranked = ranked_actions(scorer, s, candidates)
    return tuple(ranked[i % len(ranked)] for i in range(slate_size))


def random_slate(candidates: Sequence[int], slate_size: int, rng: np.random.Generator) -> Slate:
    """Uniform slate of candidates, without replacement whenever there are enough of them."""
    if not candidates:
        raise DomainError("no candidate actions to sample")
    pool = np.asarray(candidates, dtype=np.int64)
    picks = rng.choice(pool, size=slate_size, replace=len(pool) < slate_size)
    return tuple(int(a) for a in picks)
