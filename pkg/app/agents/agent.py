"""Slate agents: simple top-K, full-slate sequential greedy, DPG+kNN, plus random and myopic baselines."""

from __future__ import annotations

import json
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from app.agents.config import AgentConfig, AgentKind, parse_agent_config
from app.agents.knn import KnnIndex
from app.agents.selection import (
    ImmediateRewardScorer, NetworkScorer, greedy_slate, greedy_slates, random_slate, top_k_slate,
)
from app.core.types import Slate, StateId, TransitionRecord, is_end_state, slate_feature_rows
from app.env.spec import EnvironmentSpec, candidate_actions
from app.errors import ConfigError, DomainError
from app.memory import ReplayBuffer
from app.neural.mlp import MlpNetwork, TargetPair

logger = logging.getLogger(__name__)


@dataclass
class Diagnostics:
    """Outcome of one learn_step."""
    updated: bool = False
    loss: float = 0.0
    mean_target: float = 0.0
    mean_q: float = 0.0
    batch: int = 0


class SlateAgent(ABC):
    """Common surface: act, learn_step, checkpointing."""

    kind: AgentKind

    def __init__(self, config: AgentConfig, spec: EnvironmentSpec, rng: np.random.Generator):
        self.config = config
        self.spec = spec
        self.rng = rng
        self.slate_size = config.slate_size or spec.slate_size

    def candidates(self, s: StateId) -> list[int]:
        if is_end_state(s):
            raise DomainError("cannot act in the end state")
        return candidate_actions(self.spec, s)

    def act(self, s: StateId, rng: np.random.Generator, explore: bool = True) -> Slate:
        """epsilon-greedy slate when exploring, the greedy construction otherwise."""
        cands = self.candidates(s)
        size = self.acting_slate_size(explore)
        if explore and self.config.epsilon > 0 and rng.random() < self.config.epsilon:
            return random_slate(cands, size, rng)
        return self.greedy(s, cands, explore)

    def acting_slate_size(self, explore: bool) -> int:
        return self.slate_size

    @abstractmethod
    def greedy(self, s: StateId, candidates: list[int], explore: bool) -> Slate: ...

    def learn_step(self, record: TransitionRecord) -> Diagnostics:
        return Diagnostics()

    def networks(self) -> dict[str, MlpNetwork]:
        return {}

    def checksum(self) -> str:
        return "|".join(f"{name}:{net.checksum()}" for name, net in sorted(self.networks().items()))

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "agent.json").write_text(self.config.model_dump_json(indent=2), encoding="utf-8")
        for name, net in self.networks().items():
            net.save(directory / f"{name}.npz")
        return directory

    def restore(self, directory: Path) -> None:
        for name, net in self.networks().items():
            loaded = MlpNetwork.load(directory / f"{name}.npz")
            if loaded.layer_sizes != net.layer_sizes:
                raise ConfigError(
                    f"{name} has layers {loaded.layer_sizes}, expected {net.layer_sizes}",
                    field="checkpoint",
                )
            net.weights, net.biases = loaded.weights, loaded.biases


class RandomAgent(SlateAgent):
    """Uniformly random candidate slates."""
    kind = AgentKind.RANDOM

    def act(self, s: StateId, rng: np.random.Generator, explore: bool = True) -> Slate:
        return random_slate(self.candidates(s), self.slate_size, rng)

    def greedy(self, s: StateId, candidates: list[int], explore: bool) -> Slate:
        raise DomainError("the random agent has no greedy slate")


class MyopicAgent(SlateAgent):
    """Sequential greedy on the exact expected immediate reward; needs no training."""
    kind = AgentKind.MYOPIC

    def __init__(self, config: AgentConfig, spec: EnvironmentSpec, rng: np.random.Generator):
        super().__init__(config, spec, rng)
        self.scorer = ImmediateRewardScorer(spec)

    def greedy(self, s: StateId, candidates: list[int], explore: bool) -> Slate:
        return greedy_slate(self.scorer, s, candidates, self.slate_size)


class ValueAgent(SlateAgent):
    """Learns Q with experience replay and a soft-updated target network."""

    def __init__(self, config: AgentConfig, spec: EnvironmentSpec, rng: np.random.Generator):
        super().__init__(config, spec, rng)
        sizes = (self.q_input_size(), *config.q_hidden, 1)
        self.q = TargetPair(MlpNetwork.initialize(sizes, rng, config.activation), config.tau)
        self.buffer = ReplayBuffer(config.buffer_capacity)
        self.updates = 0

    def q_input_size(self) -> int:
        return self.spec.feature_dim * (self.slate_size + 1)

    def scorer(self, target: bool = False) -> NetworkScorer:
        return NetworkScorer(self.q.target if target else self.q.live, self.spec)

    def networks(self) -> dict[str, MlpNetwork]:
        return {"q": self.q.live, "q_target": self.q.target}

    def training_slate(self, slate: Slate) -> Slate:
        """The slate whose value a stored record trains."""
        return slate

    @abstractmethod
    def bootstrap_slates(self, states: list[StateId]) -> list[Slate]:
        """a' for each TD target: the greedy rule applied with the target networks."""

    def td_targets(self, batch: list[TransitionRecord]) -> np.ndarray:
        """r, plus gamma * Q_target(s', a') for non-terminal records."""
        targets = np.array([rec.reward for rec in batch], dtype=np.float64)
        live = [j for j, rec in enumerate(batch) if not rec.terminal]
        if live:
            states = [batch[j].next_state for j in live]
            x = slate_feature_rows(states, self.bootstrap_slates(states), self.spec)
            targets[live] += self.config.gamma * self.q.target.forward(x)[:, 0]
        return targets

    def td_target(self, rec: TransitionRecord) -> float:
        return float(self.td_targets([rec])[0])

    def learn_step(self, record: TransitionRecord) -> Diagnostics:
        """Store the record, then one replayed minibatch update of Q (and the policy)."""
        self.buffer.push(record)
        cfg = self.config
        if len(self.buffer) < cfg.batch_size:
            return Diagnostics()

        batch = self.buffer.sample(cfg.batch_size, self.rng)
        targets = self.td_targets(batch)
        x = slate_feature_rows(
            [rec.state for rec in batch], [self.training_slate(rec.slate) for rec in batch], self.spec,
        )
        q = self.q.live.forward(x)[:, 0]
        err = q - targets
        grads = self.q.live.grad_params(x, (2.0 * err / len(batch))[:, None])
        self.q.live.sgd_step(grads, cfg.eta)

        self.policy_update(batch)
        self.soft_update_targets()
        self.updates += 1
        return Diagnostics(
            updated=True,
            loss=float(np.mean(err * err)),
            mean_target=float(np.mean(targets)),
            mean_q=float(np.mean(q)),
            batch=len(batch),
        )

    def policy_update(self, batch: list[TransitionRecord]) -> None:
        pass

    def soft_update_targets(self) -> None:
        self.q.soft_update()


class TopKAgent(ValueAgent):
    """Learns single-action values at slate size 1; presents the K best at test time."""
    kind = AgentKind.TOP_K

    def q_input_size(self) -> int:
        return self.spec.feature_dim * 2

    def acting_slate_size(self, explore: bool) -> int:
        return 1 if explore else self.slate_size

    def training_slate(self, slate: Slate) -> Slate:
        return slate[:1]

    def greedy(self, s: StateId, candidates: list[int], explore: bool) -> Slate:
        return top_k_slate(self.scorer(), s, candidates, self.acting_slate_size(explore))

    def bootstrap_slates(self, states: list[StateId]) -> list[Slate]:
        choices = [[candidate_actions(self.spec, s)] for s in states]
        return greedy_slates(self.q.target, self.spec, states, choices, 1)


class FullSlateAgent(ValueAgent):
    """Values whole slates; sequential greedy over every candidate per slot."""
    kind = AgentKind.FULL_SLATE

    def greedy(self, s: StateId, candidates: list[int], explore: bool) -> Slate:
        return greedy_slate(self.scorer(), s, candidates, self.slate_size)

    def bootstrap_slates(self, states: list[StateId]) -> list[Slate]:
        choices = [[candidate_actions(self.spec, s)] * self.slate_size for s in states]
        return greedy_slates(self.q.target, self.spec, states, choices, self.slate_size)


class DpgKnnAgent(ValueAgent):
    """Full-slate agent whose per-slot choice sets are the k nearest candidates to policy proto-actions."""
    kind = AgentKind.DPG_KNN

    def __init__(self, config: AgentConfig, spec: EnvironmentSpec, rng: np.random.Generator):
        super().__init__(config, spec, rng)
        d = spec.feature_dim
        sizes = (d, *config.policy_hidden, d * self.slate_size)
        self.policy = TargetPair(MlpNetwork.initialize(sizes, rng, config.activation), config.tau)
        self._indexes: dict[int, KnnIndex] = {}

    def networks(self) -> dict[str, MlpNetwork]:
        return {**super().networks(), "policy": self.policy.live, "policy_target": self.policy.target}

    def index(self, s: StateId, candidates: list[int]) -> KnnIndex:
        if s not in self._indexes:
            self._indexes[s] = KnnIndex.from_candidates(self.spec, candidates)
        return self._indexes[s]

    def protos(self, s: StateId, target: bool = False) -> np.ndarray:
        """The policy's l proto-actions at s, one row per slot."""
        return self.batch_protos([s], target)[0]

    def batch_protos(self, states: list[StateId], target: bool = False) -> np.ndarray:
        net = self.policy.target if target else self.policy.live
        out = net.forward(self.spec.features[np.asarray(states, dtype=np.int64)])
        return out.reshape(len(states), self.slate_size, self.spec.feature_dim)

    def choice_sets(
        self, s: StateId, candidates: list[int], target: bool = False, protos: np.ndarray | None = None,
    ) -> list[list[int]]:
        """Per slot, the k candidates nearest that slot's proto-action."""
        if protos is None:
            protos = self.protos(s, target)
        k = self.config.neighbours(len(candidates))
        return self.index(s, candidates).query_many(protos, k)

    def greedy(self, s: StateId, candidates: list[int], explore: bool) -> Slate:
        restrict = self.choice_sets(s, candidates)
        return greedy_slate(self.scorer(), s, candidates, self.slate_size, restrict)

    def bootstrap_slates(self, states: list[StateId]) -> list[Slate]:
        protos = self.batch_protos(states, target=True)
        choices = [
            self.choice_sets(s, candidate_actions(self.spec, s), protos=p) for s, p in zip(states, protos)
        ]
        return greedy_slates(self.q.target, self.spec, states, choices, self.slate_size)

    def policy_update(self, batch: list[TransitionRecord]) -> None:
        """Ascend Q(s, pi(s)) through the chain rule dQ/da * dpi/dtheta."""
        d = self.spec.feature_dim
        states = self.spec.features[[rec.state for rec in batch]]
        protos = self.policy.live.forward(states)
        dq_da = self.q.live.grad_input(np.concatenate([states, protos], axis=1))[:, d:]
        grads = self.policy.live.grad_params(states, -dq_da / len(batch))
        self.policy.live.sgd_step(grads, self.config.eta)

    def soft_update_targets(self) -> None:
        super().soft_update_targets()
        self.policy.soft_update()


AGENT_CLASSES: dict[AgentKind, type[SlateAgent]] = {
    AgentKind.TOP_K: TopKAgent,
    AgentKind.FULL_SLATE: FullSlateAgent,
    AgentKind.DPG_KNN: DpgKnnAgent,
    AgentKind.RANDOM: RandomAgent,
    AgentKind.MYOPIC: MyopicAgent,
}


def build_agent(config: AgentConfig, spec: EnvironmentSpec, rng: np.random.Generator) -> SlateAgent:
    agent = AGENT_CLASSES[config.agent_kind](config, spec, rng)
    logger.info(
        f"Built {config.agent_kind.value} agent: l={agent.slate_size}, "
        f"eps={config.epsilon}, gamma={config.gamma}, knn={config.knn_k}"
    )
    return agent


def act(agent: SlateAgent, s: StateId, rng: np.random.Generator, explore: bool = True) -> Slate:
    return agent.act(s, rng, explore)


def learn_step(agent: SlateAgent, record: TransitionRecord) -> Diagnostics:
    return agent.learn_step(record)


def load_agent(directory: str | Path, spec: EnvironmentSpec, rng: np.random.Generator) -> SlateAgent:
    """Rebuild an agent from agent.json and restore its networks."""
    directory = Path(directory)
    config_path = directory / "agent.json"
    if not config_path.exists():
        raise ConfigError(f"no agent.json in {directory}", field="checkpoint")
    config = parse_agent_config(json.loads(config_path.read_text(encoding="utf-8")))
    agent = build_agent(config, spec, rng)
    agent.restore(directory)
    logger.info(f"Restored {config.agent_kind.value} agent from {directory}")
    return agent
