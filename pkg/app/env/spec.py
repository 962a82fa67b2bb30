"""EnvironmentSpec: the weighted graph, rewards, features and execution constants of one slate-MDP."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from app.config import MAX_OUT_DEGREE
from app.core.types import ActionId, StateId, is_end_state
from app.errors import ConfigError, InvalidIdError

logger = logging.getLogger(__name__)

DISCOUNT_MODES = ("divide", "multiply")
EXECUTION_MODELS = ("weighted", "cascade")

Edge = tuple[int, float]


@dataclass(frozen=True, eq=False)
class EnvironmentSpec:
    """Immutable description of one graph-based slate-MDP.

    `edges[s]` lists (action, weight) pairs with strictly positive weight; these
    are the candidate actions of s. Under the `weighted` execution model the
    weights are relative masses competing with `fail_weight`; under `cascade`
    they are per-slot acceptance probabilities in (0, 1].
    """
    n_states: int
    feature_dim: int
    features: np.ndarray
    rewards: np.ndarray
    edges: tuple[tuple[Edge, ...], ...]
    slate_size: int
    fail_weight: float = 0.5
    p_end_fail: float = 0.2
    p_end_exec: float = 0.1
    discount: str = "divide"
    execution_model: str = "weighted"
    start_state: int | None = None

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64)
        rewards = np.array(self.rewards, dtype=np.float64)
        features.setflags(write=False)
        rewards.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(
            self, "edges",
            tuple(tuple((int(a), float(w)) for a, w in row) for row in self.edges),
        )
        self.validate()

    def validate(self) -> None:
        """Check every structural invariant; raises ConfigError naming the field."""
        n, d = self.n_states, self.feature_dim
        if n < 1:
            raise ConfigError("must be positive", field="n_states")
        if d < 1:
            raise ConfigError("must be positive", field="feature_dim")
        if self.slate_size < 1:
            raise ConfigError("must be positive", field="slate_size")
        if self.features.shape != (n, d):
            raise ConfigError(f"expected shape {(n, d)}, got {self.features.shape}", field="features")
        if not np.all(np.isfinite(self.features)):
            raise ConfigError("entries must be finite", field="features")
        if self.rewards.shape != (n,):
            raise ConfigError(f"expected {n} entries, got {self.rewards.shape}", field="rewards")
        if np.any(self.rewards < 0) or not np.all(np.isfinite(self.rewards)):
            raise ConfigError("rewards must be finite and non-negative", field="rewards")
        if len(self.edges) != n:
            raise ConfigError(f"expected {n} rows, got {len(self.edges)}", field="edges")
        if not self.fail_weight > 0:
            raise ConfigError("must be > 0", field="fail_weight")
        for name in ("p_end_fail", "p_end_exec"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError("must be a probability", field=name)
        if self.discount not in DISCOUNT_MODES:
            raise ConfigError(f"must be one of {DISCOUNT_MODES}", field="discount")
        if self.execution_model not in EXECUTION_MODELS:
            raise ConfigError(f"must be one of {EXECUTION_MODELS}", field="execution_model")
        if self.start_state is not None and not 0 <= self.start_state < n:
            raise ConfigError(f"outside [0, {n})", field="start_state")

        for s, row in enumerate(self.edges):
            if not 1 <= len(row) <= MAX_OUT_DEGREE:
                raise ConfigError(
                    f"state {s} has {len(row)} candidates, need 1..{MAX_OUT_DEGREE}",
                    field="edges",
                )
            seen = set()
            for a, w in row:
                if not 0 <= a < n:
                    raise ConfigError(f"state {s} points at {a}", field="edges")
                if a in seen:
                    raise ConfigError(f"state {s} lists action {a} twice", field="edges")
                seen.add(a)
                if not w > 0 or not np.isfinite(w):
                    raise ConfigError(f"weight {w} on ({s}, {a}) must be positive", field="edges")
                if self.execution_model == "cascade" and w > 1:
                    raise ConfigError(f"cascade weight {w} on ({s}, {a}) exceeds 1", field="edges")

    @cached_property
    def _weight_maps(self) -> tuple[dict[int, float], ...]:
        return tuple(dict(row) for row in self.edges)

    @cached_property
    def _candidates(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(sorted(a for a, _ in row)) for row in self.edges)

    def weight(self, s: StateId, a: ActionId) -> float:
        """w_{s,a}; zero for actions outside the candidate set."""
        return self._weight_maps[s].get(a, 0.0)

    def replace(self, **changes) -> EnvironmentSpec:
        return replace(self, **changes)


def candidate_actions(env: EnvironmentSpec, s: StateId) -> list[ActionId]:
    """Actions with positive weight from s, ascending; empty for the end state."""
    if is_end_state(s):
        return []
    if not 0 <= s < env.n_states:
        raise InvalidIdError(f"state {s} outside [0, {env.n_states})")
    return list(env._candidates[s])
