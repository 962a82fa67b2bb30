"""Agent configuration."""

from __future__ import annotations

import math
from enum import Enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from app.config import (
    ACTIVATION, BATCH_SIZE, BUFFER_CAPACITY, EPSILON, ETA, GAMMA, KNN_FRACTION,
    POLICY_HIDDEN, Q_HIDDEN, TAU,
)
from app.errors import ConfigError


class AgentKind(str, Enum):
    TOP_K = "topk"
    FULL_SLATE = "full"
    DPG_KNN = "dpgknn"
    RANDOM = "random"
    MYOPIC = "myopic"


class AgentConfig(BaseModel):
    """Hyperparameters of one agent. slate_size None means the environment's l."""
    model_config = ConfigDict(extra="forbid")

    agent_kind: AgentKind = AgentKind.FULL_SLATE
    slate_size: int | None = Field(default=None, ge=1)
    epsilon: float = Field(default=EPSILON, ge=0, le=1)
    gamma: float = Field(default=GAMMA, ge=0, le=1)
    eta: float = Field(default=ETA, gt=0)
    tau: float = Field(default=TAU, gt=0, le=1)
    batch_size: int = Field(default=BATCH_SIZE, ge=1)
    buffer_capacity: int = Field(default=BUFFER_CAPACITY, ge=1)
    # None: ceil(10% of the candidates); "all": every candidate
    knn_k: int | Literal["all"] | None = None
    alpha: float = Field(default=1.0, gt=0)
    q_hidden: tuple[int, ...] = Q_HIDDEN
    policy_hidden: tuple[int, ...] = POLICY_HIDDEN
    activation: Literal["relu", "tanh"] = ACTIVATION

    @field_validator("knn_k")
    @classmethod
    def _positive_k(cls, v):
        if isinstance(v, int) and v < 1:
            raise ValueError("knn_k must be >= 1 or 'all'")
        return v

    def neighbours(self, n_candidates: int) -> int:
        """Size of each slot's nearest-neighbour choice set for n_candidates candidates."""
        if self.knn_k == "all":
            return n_candidates
        if self.knn_k is None:
            return max(1, math.ceil(KNN_FRACTION * n_candidates))
        return min(self.knn_k, n_candidates)


def parse_knn(value: str | int | None) -> int | Literal["all"] | None:
    """CLI form of knn_k: 'all', 'auto' (10%) or a positive integer."""
    if value is None or value == "auto":
        return None
    if value == "all":
        return "all"
    try:
        k = int(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"expected 'all', 'auto' or an integer, got {value!r}", field="knn") from e
    if k < 1:
        raise ConfigError("must be >= 1", field="knn")
    return k


def parse_agent_config(data: dict) -> AgentConfig:
    try:
        return AgentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(p) for p in first.get("loc", ())) or "agent"
        raise ConfigError(first.get("msg", str(e)), field=field) from e
