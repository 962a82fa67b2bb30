"""Graph slate-MDP simulator plus the fatal-failure and risk-seeking wrappers.

Every environment splits a step into two draws from the caller's rng:
`sample_execution` picks the executed action (or FAIL), `resolve` draws the
next state and termination. Wrappers override only the part they change, so a
wrapped and an unwrapped environment consume the same stream on every
executed branch.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import NamedTuple, Sequence

import numpy as np

from app.core.types import (
    END_STATE, FAIL, ActionId, Slate, StateId, TransitionRecord, as_slate, is_end_state,
)
from app.env.execution import execution_distribution
from app.env.spec import EnvironmentSpec
from app.errors import ConfigError, DomainError

logger = logging.getLogger(__name__)


class Outcome(NamedTuple):
    """One exact branch of a transition: probability, executed action, reward, s', terminal."""
    prob: float
    executed: ActionId
    reward: float
    next_state: StateId
    terminal: bool


class SlateEnvironment(ABC):
    """A steppable slate-MDP over an EnvironmentSpec."""

    @property
    @abstractmethod
    def spec(self) -> EnvironmentSpec: ...

    def reset(self, rng: np.random.Generator) -> StateId:
        """Initial state: the environment's start state, else uniform over all states."""
        spec = self.spec
        if spec.start_state is not None:
            return spec.start_state
        return int(rng.integers(spec.n_states))

    @abstractmethod
    def sample_execution(self, s: StateId, slate: Slate, rng: np.random.Generator) -> ActionId: ...

    @abstractmethod
    def resolve(
        self, s: StateId, slate: Slate, executed: ActionId, rng: np.random.Generator,
    ) -> TransitionRecord: ...

    @abstractmethod
    def transitions(self, s: StateId, slate: Sequence[int]) -> list[Outcome]:
        """Exact enumeration of every outcome with positive probability."""

    def step(self, s: StateId, slate: Sequence[int], rng: np.random.Generator) -> TransitionRecord:
        if is_end_state(s):
            raise DomainError("cannot step the end state")
        slate = as_slate(slate)
        if not slate:
            raise DomainError("slate must hold at least one action")
        executed = self.sample_execution(s, slate, rng)
        return self.resolve(s, slate, executed, rng)


class GraphEnvironment(SlateEnvironment):
    """The raw test-environment template: weighted execution, uniform jump on FAIL."""

    def __init__(self, spec: EnvironmentSpec):
        self._spec = spec

    @property
    def spec(self) -> EnvironmentSpec:
        return self._spec

    def sample_execution(self, s: StateId, slate: Slate, rng: np.random.Generator) -> ActionId:
        outcomes = execution_distribution(self._spec, s, slate).outcomes()
        u = rng.random()
        acc = 0.0
        for a, p in outcomes:
            acc += p
            if u < acc:
                return a
        # Rounding left u above the accumulated mass; fall back to the last outcome with mass.
        for a, p in reversed(outcomes):
            if p > 0:
                return a
        return FAIL

    def resolve(
        self, s: StateId, slate: Slate, executed: ActionId, rng: np.random.Generator,
    ) -> TransitionRecord:
        spec = self._spec
        if executed == FAIL:
            next_state = int(rng.integers(spec.n_states))
            terminal = bool(rng.random() < spec.p_end_fail)
        else:
            next_state = executed
            terminal = bool(rng.random() < spec.p_end_exec)
        return TransitionRecord(
            state=s,
            slate=slate,
            executed=executed,
            reward=float(spec.rewards[next_state]),
            next_state=next_state,
            terminal=terminal,
        )

    def transitions(self, s: StateId, slate: Sequence[int]) -> list[Outcome]:
        spec = self._spec
        dist = execution_distribution(spec, s, slate)
        out: list[Outcome] = []
        for a, p in dist.entries:
            r = float(spec.rewards[a])
            _append_split(out, p, a, r, a, spec.p_end_exec)
        pf = dist.fail_probability
        if pf > 0:
            share = pf / spec.n_states
            for nxt in range(spec.n_states):
                _append_split(out, share, FAIL, float(spec.rewards[nxt]), nxt, spec.p_end_fail)
        return out


def _append_split(
    out: list[Outcome], p: float, executed: ActionId, reward: float, nxt: StateId, p_end: float,
) -> None:
    if p * (1.0 - p_end) > 0:
        out.append(Outcome(p * (1.0 - p_end), executed, reward, nxt, False))
    if p * p_end > 0:
        out.append(Outcome(p * p_end, executed, reward, nxt, True))


class EnvironmentWrapper(SlateEnvironment):
    """Delegates everything to an inner environment."""

    def __init__(self, inner: SlateEnvironment):
        self.inner = inner

    @property
    def spec(self) -> EnvironmentSpec:
        return self.inner.spec

    def reset(self, rng: np.random.Generator) -> StateId:
        return self.inner.reset(rng)

    def sample_execution(self, s: StateId, slate: Slate, rng: np.random.Generator) -> ActionId:
        return self.inner.sample_execution(s, slate, rng)

    def resolve(
        self, s: StateId, slate: Slate, executed: ActionId, rng: np.random.Generator,
    ) -> TransitionRecord:
        return self.inner.resolve(s, slate, executed, rng)

    def transitions(self, s: StateId, slate: Sequence[int]) -> list[Outcome]:
        return self.inner.transitions(s, slate)


class FatalFailureEnvironment(EnvironmentWrapper):
    """Any FAIL outcome ends the episode at the end state with zero reward."""

    def resolve(
        self, s: StateId, slate: Slate, executed: ActionId, rng: np.random.Generator,
    ) -> TransitionRecord:
        if executed == FAIL:
            return TransitionRecord(
                state=s, slate=slate, executed=FAIL, reward=0.0,
                next_state=END_STATE, terminal=True,
            )
        return self.inner.resolve(s, slate, executed, rng)

    def transitions(self, s: StateId, slate: Sequence[int]) -> list[Outcome]:
        inner = self.inner.transitions(s, slate)
        out = [o for o in inner if o.executed != FAIL]
        p_fail = sum(o.prob for o in inner if o.executed == FAIL)
        if p_fail > 0:
            out.append(Outcome(p_fail, FAIL, 0.0, END_STATE, True))
        return out


class RiskSeekingEnvironment(EnvironmentWrapper):
    """Emits r**alpha in place of every reward r."""

    def __init__(self, inner: SlateEnvironment, alpha: float):
        if not alpha > 0:
            raise ConfigError("must be > 0", field="alpha")
        super().__init__(inner)
        self.alpha = alpha

    def _transform(self, r: float) -> float:
        return r ** self.alpha if self.alpha != 1.0 else r

    def resolve(
        self, s: StateId, slate: Slate, executed: ActionId, rng: np.random.Generator,
    ) -> TransitionRecord:
        rec = self.inner.resolve(s, slate, executed, rng)
        return TransitionRecord(
            state=rec.state, slate=rec.slate, executed=rec.executed,
            reward=self._transform(rec.reward), next_state=rec.next_state,
            terminal=rec.terminal,
        )

    def transitions(self, s: StateId, slate: Sequence[int]) -> list[Outcome]:
        return [o._replace(reward=self._transform(o.reward)) for o in self.inner.transitions(s, slate)]


def as_environment(env: EnvironmentSpec | SlateEnvironment) -> SlateEnvironment:
    if isinstance(env, SlateEnvironment):
        return env
    return GraphEnvironment(env)


def step(
    env: EnvironmentSpec | SlateEnvironment, s: StateId, slate: Sequence[int], rng: np.random.Generator,
) -> TransitionRecord:
    """Sample one transition from state s under slate."""
    return as_environment(env).step(s, slate, rng)


def wrap_fatal_failure(env: EnvironmentSpec | SlateEnvironment) -> SlateEnvironment:
    return FatalFailureEnvironment(as_environment(env))


def wrap_risk_seeking(env: EnvironmentSpec | SlateEnvironment, alpha: float) -> SlateEnvironment:
    return RiskSeekingEnvironment(as_environment(env), alpha)


def is_fatal(env: SlateEnvironment) -> bool:
    """True if a fatal-failure wrapper sits anywhere in the wrapper chain."""
    while isinstance(env, EnvironmentWrapper):
        if isinstance(env, FatalFailureEnvironment):
            return True
        env = env.inner
    return False
