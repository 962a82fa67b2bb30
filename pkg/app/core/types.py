"""Shared vocabulary: state/action ids, slates, feature vectors and transition records.

States and actions are plain integers in [0, N). Two sentinels live outside
that range: END_STATE is the absorbing end state the fatal-failure wrapper
jumps to, and FAIL marks a step in which no slate element was executed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from app.errors import InvalidIdError

if TYPE_CHECKING:
    from app.env.spec import EnvironmentSpec

ActionId = int
StateId = int
Slate = tuple[int, ...]
FeatureVector = np.ndarray

END_STATE: StateId = -1
FAIL: ActionId = -1


def is_end_state(s: StateId) -> bool:
    return s == END_STATE


def as_slate(actions: Sequence[int]) -> Slate:
    """Normalize any integer sequence (list, ndarray row) to a Slate tuple."""
    return tuple(int(a) for a in actions)


@dataclass(frozen=True)
class TransitionRecord:
    """One experience tuple (s, slate, executed-or-FAIL, r, s', terminal)."""
    state: StateId
    slate: Slate
    executed: ActionId
    reward: float
    next_state: StateId
    terminal: bool

    def __post_init__(self):
        if self.reward < 0:
            raise ValueError(f"rewards are non-negative, got {self.reward}")

    @property
    def failed(self) -> bool:
        return self.executed == FAIL


def check_ids(env: EnvironmentSpec, state: StateId, slate: Sequence[int]) -> None:
    """Raise InvalidIdError unless the state and every slate entry lie in [0, N)."""
    n = env.n_states
    if not 0 <= state < n:
        raise InvalidIdError(f"state {state} outside [0, {n})")
    for a in slate:
        if not 0 <= a < n:
            raise InvalidIdError(f"action {a} outside [0, {n})")


def slate_features(slate: Sequence[int], state: StateId, env: EnvironmentSpec) -> FeatureVector:
    """Concatenate [state features | slot 1 | ... | slot l] into one d*(l+1) vector."""
    check_ids(env, state, slate)
    rows = [env.features[state]] + [env.features[a] for a in slate]
    return np.concatenate(rows)


def slate_feature_matrix(
    slates: Sequence[Sequence[int]], state: StateId, env: EnvironmentSpec,
) -> np.ndarray:
    """Batched slate_features: one row per slate, all slates of equal length."""
    check_ids(env, state, ())
    idx = np.asarray(slates, dtype=np.int64)
    if idx.ndim != 2:
        raise InvalidIdError("slates must share one length")
    if idx.size and (idx.min() < 0 or idx.max() >= env.n_states):
        raise InvalidIdError(f"slate entry outside [0, {env.n_states})")
    feats = env.features
    blocks = feats[idx].reshape(len(idx), -1)
    head = np.broadcast_to(feats[state], (len(idx), feats.shape[1]))
    return np.concatenate([head, blocks], axis=1)


def slate_feature_rows(
    states: Sequence[StateId], slates: Sequence[Sequence[int]], env: EnvironmentSpec,
) -> np.ndarray:
    """Row b is slate_features(slates[b], states[b], env); all slates of equal length."""
    slot_ids = np.asarray(slates, dtype=np.int64)
    if slot_ids.ndim != 2 or len(slot_ids) != len(states):
        raise InvalidIdError("one slate per state, all of one length")
    idx = np.column_stack([np.asarray(states, dtype=np.int64), slot_ids])
    if idx.size and (idx.min() < 0 or idx.max() >= env.n_states):
        raise InvalidIdError(f"id outside [0, {env.n_states})")
    return env.features[idx].reshape(len(idx), -1)
