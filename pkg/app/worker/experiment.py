"""Experiment configuration and environment resolution."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from app.agents.config import AgentConfig
from app.config import (
    DEFAULT_SEEDS, EVAL_EPISODES, EVAL_EVERY, MAX_EPISODE_STEPS, TRAIN_STEPS, WINDOW,
)
from app.env.generator import GeneratorConfig, generate_environment
from app.env.io import load_environment
from app.env.spec import EnvironmentSpec
from app.errors import ConfigError

logger = logging.getLogger(__name__)


class ExperimentConfig(BaseModel):
    """One train/eval experiment over several seeds.

    The environment comes from env_path when set, otherwise from the generator.
    """
    model_config = ConfigDict(extra="forbid")

    env_path: str | None = None
    generator: GeneratorConfig = Field(default_factory=GeneratorConfig)
    agent: AgentConfig = Field(default_factory=AgentConfig)
    train_steps: int = Field(default=TRAIN_STEPS, ge=0)
    eval_episodes: int = Field(default=EVAL_EPISODES, ge=1)
    eval_every: int = Field(default=EVAL_EVERY, ge=1)
    seeds: list[int] = Field(default_factory=lambda: list(DEFAULT_SEEDS))
    window: int = Field(default=WINDOW, ge=1)
    max_episode_steps: int = Field(default=MAX_EPISODE_STEPS, ge=1)
    fatal_failure: bool = True
    save_checkpoints: bool = True
    out: str | None = None

    @field_validator("seeds")
    @classmethod
    def _distinct_seeds(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("at least one seed is required")
        if any(seed < 0 for seed in v):
            raise ValueError("seeds must be non-negative")
        if len(set(v)) != len(v):
            raise ValueError("seeds must be distinct")
        return v

    def eval_steps(self) -> list[int]:
        """Training steps after which an evaluation block runs."""
        if self.train_steps == 0:
            return [0]
        steps = list(range(self.eval_every, self.train_steps + 1, self.eval_every))
        if not steps or steps[-1] != self.train_steps:
            steps.append(self.train_steps)
        return steps


def parse_experiment_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(p) for p in first.get("loc", ())) or "experiment"
        raise ConfigError(first.get("msg", str(e)), field=field) from e


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"file not found: {path}", field="config")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"not valid JSON: {e}", field="config") from e
    return parse_experiment_config(data)


def resolve_environment(config: ExperimentConfig) -> EnvironmentSpec:
    """Load the environment file, or generate one from the generator config."""
    if config.env_path:
        spec = load_environment(config.env_path)
    else:
        gen = config.generator
        spec = generate_environment(gen, np.random.default_rng(gen.seed))
    if config.agent.slate_size is not None and config.agent.slate_size != spec.slate_size:
        logger.info(f"Agent slate size {config.agent.slate_size} overrides environment l={spec.slate_size}")
        spec = spec.replace(slate_size=config.agent.slate_size)
    return spec
