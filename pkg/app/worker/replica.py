"""One seed of an experiment: train on the shaped environment, evaluate on the raw one.

Each replica owns its environment views, agent and random streams, so
replicas can run in worker threads without sharing mutable state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from app.agents.agent import SlateAgent, build_agent
from app.config import SHOW_PROGRESS
from app.core.types import StateId
from app.env.simulator import GraphEnvironment, SlateEnvironment, wrap_fatal_failure, wrap_risk_seeking
from app.env.spec import EnvironmentSpec
from app.errors import SlateMdpError
from app.metrics import EvalRow
from app.worker.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

# Stream tags keep evaluation draws independent of the training stream.
TRAIN_STREAM = 0
EVAL_STREAM = 1


@dataclass
class ReplicaResult:
    seed: int
    rows: list[EvalRow]
    agent: SlateAgent


def training_environment(spec: EnvironmentSpec, fatal_failure: bool, alpha: float) -> SlateEnvironment:
    """The training view: fatal failure (optional) and the r**alpha transform when alpha != 1."""
    env: SlateEnvironment = GraphEnvironment(spec)
    if fatal_failure:
        env = wrap_fatal_failure(env)
    if alpha != 1.0:
        env = wrap_risk_seeking(env, alpha)
    return env


def evaluate(
    agent: SlateAgent,
    env: SlateEnvironment,
    episodes: int,
    rng: np.random.Generator,
    max_episode_steps: int,
) -> np.ndarray:
    """Undiscounted total reward of greedy (epsilon = 0) episodes; parameters stay untouched."""
    before = agent.checksum()
    returns = np.zeros(episodes)
    for ep in range(episodes):
        s: StateId = env.reset(rng)
        total = 0.0
        for _ in range(max_episode_steps):
            slate = agent.act(s, rng, explore=False)
            rec = env.step(s, slate, rng)
            total += rec.reward
            if rec.terminal:
                break
            s = rec.next_state
        returns[ep] = total
    if agent.checksum() != before:
        raise SlateMdpError("evaluation changed agent parameters")
    return returns


class ReplicaRunner:
    """Trains and periodically evaluates one agent for one seed."""

    def __init__(self, spec: EnvironmentSpec, config: ExperimentConfig, seed: int):
        self.spec = spec
        self.config = config
        self.seed = seed
        agent_ss, env_ss, act_ss = np.random.SeedSequence([seed, TRAIN_STREAM]).spawn(3)
        self.env_rng = np.random.default_rng(env_ss)
        self.act_rng = np.random.default_rng(act_ss)
        self.agent = build_agent(config.agent, spec, np.random.default_rng(agent_ss))
        self.train_env = training_environment(spec, config.fatal_failure, config.agent.alpha)
        self.eval_env = GraphEnvironment(spec)

    def eval_rng(self, step: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, EVAL_STREAM, step])

    def evaluate_block(self, step: int) -> EvalRow:
        cfg = self.config
        returns = evaluate(self.agent, self.eval_env, cfg.eval_episodes, self.eval_rng(step), cfg.max_episode_steps)
        row = EvalRow(step=step, seed=self.seed, mean_return=float(np.mean(returns)), episodes=cfg.eval_episodes)
        logger.info(f"[Seed {self.seed}] step {step}: mean return {row.mean_return:.4f}")
        return row

    def run(self) -> ReplicaResult:
        cfg = self.config
        pending = cfg.eval_steps()
        rows: list[EvalRow] = []
        if pending[0] == 0:
            rows.append(self.evaluate_block(0))
            pending.pop(0)

        s: StateId | None = None
        episode_steps = 0
        progress = tqdm(
            range(1, cfg.train_steps + 1),
            desc=f"seed {self.seed}",
            disable=not SHOW_PROGRESS,
            leave=False,
        )
        for t in progress:
            if s is None:
                s = self.train_env.reset(self.env_rng)
                episode_steps = 0
            slate = self.agent.act(s, self.act_rng, explore=True)
            rec = self.train_env.step(s, slate, self.env_rng)
            self.agent.learn_step(rec)
            episode_steps += 1
            if rec.terminal or episode_steps >= cfg.max_episode_steps:
                s = None
            else:
                s = rec.next_state

            if pending and t == pending[0]:
                rows.append(self.evaluate_block(t))
                pending.pop(0)

        logger.info(f"[Seed {self.seed}] finished {cfg.train_steps} training steps")
        return ReplicaResult(seed=self.seed, rows=rows, agent=self.agent)
