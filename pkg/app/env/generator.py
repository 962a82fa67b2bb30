"""Synthetic slate-MDP environments.

`generate_environment` draws a random weighted digraph whose statistics match
the published test template (1..60 candidates per state, typical weight 0.5),
either directly or by breadth-first extraction from a larger host graph.
`chain_environment` and `cascade_environment` build small hand-shaped
instances for the risk-seeking and submodularity experiments.
"""

from __future__ import annotations

import logging
from typing import Literal

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from app.config import (
    GEN_FEATURE_DIM, GEN_N_STATES, GEN_SLATE_SIZE, MAX_OUT_DEGREE,
    P_END_EXEC, P_END_FAIL, W_FAIL,
)
from app.env.spec import EnvironmentSpec
from app.errors import ConfigError

logger = logging.getLogger(__name__)


class GeneratorConfig(BaseModel):
    """Parameters of the synthetic graph generator."""
    model_config = ConfigDict(extra="forbid")

    mode: Literal["uniform", "bfs"] = "uniform"
    n_states: int = Field(default=GEN_N_STATES, ge=1)
    feature_dim: int = Field(default=GEN_FEATURE_DIM, ge=1)
    slate_size: int = Field(default=GEN_SLATE_SIZE, ge=1)
    min_out_degree: int = Field(default=1, ge=1)
    max_out_degree: int = Field(default=MAX_OUT_DEGREE, ge=1, le=MAX_OUT_DEGREE)
    weight_low: float = Field(default=0.1, gt=0)
    weight_high: float = Field(default=1.0, gt=0)
    high_reward_fraction: float = Field(default=0.1, ge=0, le=1)
    low_reward_range: tuple[float, float] = (0.0, 1.0)
    high_reward_range: tuple[float, float] = (1.0, 10.0)
    feature_distribution: Literal["normal", "uniform"] = "normal"
    unit_norm_features: bool = True
    fail_weight: float = Field(default=W_FAIL, gt=0)
    p_end_fail: float = Field(default=P_END_FAIL, ge=0, le=1)
    p_end_exec: float = Field(default=P_END_EXEC, ge=0, le=1)
    discount: Literal["divide", "multiply"] = "divide"
    # bfs mode: n_states is the host size, the extracted graph is smaller
    bfs_depth: int = Field(default=3, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _check_ranges(self) -> GeneratorConfig:
        if "max_out_degree" not in self.model_fields_set:
            # default bound shrinks to what the state count allows
            self.max_out_degree = min(MAX_OUT_DEGREE, max(1, self.n_states - 1))
        if self.min_out_degree > self.max_out_degree:
            raise ValueError("min_out_degree exceeds max_out_degree")
        if self.weight_low > self.weight_high:
            raise ValueError("weight_low exceeds weight_high")
        for name in ("low_reward_range", "high_reward_range"):
            lo, hi = getattr(self, name)
            if lo < 0 or lo > hi:
                raise ValueError(f"{name} must satisfy 0 <= low <= high")
        return self


def parse_generator_config(data: dict) -> GeneratorConfig:
    """Validate a raw mapping; pydantic failures become ConfigError."""
    try:
        return GeneratorConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(p) for p in first.get("loc", ())) or "generator"
        raise ConfigError(first.get("msg", str(e)), field=field) from e


# ── Graph synthesis ───────────────────────────────────────────────────

def random_digraph(
    n: int, min_degree: int, max_degree: int, weight_low: float, weight_high: float,
    rng: np.random.Generator,
) -> nx.DiGraph:
    """Digraph without self loops; every node gets a uniform out-degree in [min, max]."""
    if max_degree > n - 1:
        raise ConfigError(
            f"out-degree {max_degree} infeasible with {n} states", field="max_out_degree",
        )
    graph = nx.DiGraph()
    graph.add_nodes_from(range(n))
    for s in range(n):
        k = int(rng.integers(min_degree, max_degree + 1))
        others = np.delete(np.arange(n), s)
        targets = rng.choice(others, size=k, replace=False)
        weights = rng.uniform(weight_low, weight_high, size=k)
        graph.add_weighted_edges_from((s, int(t), float(w)) for t, w in zip(targets, weights))
    return graph


def extract_subgraph(host: nx.DiGraph, seed_node: int, depth: int) -> nx.DiGraph:
    """Breadth-first ball of radius `depth` around seed_node, childless nodes pruned repeatedly.

    Survivors are relabelled 0..N'-1 in ascending original order.
    """
    reached = nx.single_source_shortest_path_length(host, seed_node, cutoff=depth)
    sub = host.subgraph(reached).copy()
    while True:
        childless = [v for v, deg in sub.out_degree() if deg == 0]
        if not childless:
            break
        sub.remove_nodes_from(childless)
    if sub.number_of_nodes() == 0:
        raise ConfigError("breadth-first extraction pruned every node", field="bfs_depth")
    return nx.convert_node_labels_to_integers(sub, ordering="sorted")


def _draw_features(cfg: GeneratorConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    if cfg.feature_distribution == "uniform":
        feats = rng.uniform(-1.0, 1.0, size=(n, cfg.feature_dim))
    else:
        feats = rng.standard_normal((n, cfg.feature_dim))
    if cfg.unit_norm_features:
        norms = np.linalg.norm(feats, axis=1, keepdims=True)
        feats = feats / np.where(norms > 0, norms, 1.0)
    return feats


def _draw_rewards(cfg: GeneratorConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    high = rng.random(n) < cfg.high_reward_fraction
    low_r = rng.uniform(*cfg.low_reward_range, size=n)
    high_r = rng.uniform(*cfg.high_reward_range, size=n)
    return np.where(high, high_r, low_r)


def spec_from_graph(
    graph: nx.DiGraph, features: np.ndarray, rewards: np.ndarray, slate_size: int, **constants,
) -> EnvironmentSpec:
    """Build an EnvironmentSpec from a digraph with integer nodes 0..N-1 and `weight` edges."""
    n = graph.number_of_nodes()
    edges = tuple(
        tuple(sorted((int(t), float(data["weight"])) for _, t, data in graph.out_edges(s, data=True)))
        for s in range(n)
    )
    return EnvironmentSpec(
        n_states=n,
        feature_dim=features.shape[1],
        features=features,
        rewards=rewards,
        edges=edges,
        slate_size=slate_size,
        **constants,
    )


def generate_environment(cfg: GeneratorConfig, rng: np.random.Generator) -> EnvironmentSpec:
    """Draw one environment; identical config and rng state give an identical spec."""
    graph = random_digraph(
        cfg.n_states, cfg.min_out_degree, cfg.max_out_degree,
        cfg.weight_low, cfg.weight_high, rng,
    )
    if cfg.mode == "bfs":
        seed_node = int(rng.integers(cfg.n_states))
        graph = extract_subgraph(graph, seed_node, cfg.bfs_depth)
        logger.info(
            f"Extracted {graph.number_of_nodes()} of {cfg.n_states} states "
            f"around seed {seed_node} (depth {cfg.bfs_depth})"
        )
    n = graph.number_of_nodes()
    features = _draw_features(cfg, n, rng)
    rewards = _draw_rewards(cfg, n, rng)
    spec = spec_from_graph(
        graph, features, rewards, cfg.slate_size,
        fail_weight=cfg.fail_weight,
        p_end_fail=cfg.p_end_fail,
        p_end_exec=cfg.p_end_exec,
        discount=cfg.discount,
    )
    logger.info(
        f"Generated environment: N={spec.n_states}, d={spec.feature_dim}, "
        f"l={spec.slate_size}, edges={graph.number_of_edges()}"
    )
    return spec


# ── Hand-shaped instances ─────────────────────────────────────────────

def chain_environment(
    length: int,
    lure_reward: float,
    goal_reward: float,
    fail_weight: float = 0.05,
    p_end_exec: float = P_END_EXEC,
    p_end_fail: float = P_END_FAIL,
) -> EnvironmentSpec:
    """Chain of `length` zero-reward states ending in a goal, with a lure exit everywhere.

    Ids: chain 0..length-1 (start 0), goal = length, lure = length+1,
    sink = length+2. Every chain state offers its successor and the lure;
    goal and lure both lead to the zero-reward sink, which loops on itself.
    Slate size is 1 and features are one-hot.
    """
    if length < 2:
        raise ConfigError("must be at least 2", field="length")
    if not 0 < lure_reward <= goal_reward:
        raise ConfigError("need 0 < lure_reward <= goal_reward", field="lure_reward")
    goal, lure, sink = length, length + 1, length + 2
    n = length + 3

    edges: list[tuple[tuple[int, float], ...]] = []
    for i in range(length):
        nxt = i + 1 if i + 1 < length else goal
        edges.append(((nxt, 1.0), (lure, 1.0)))
    edges.append(((sink, 1.0),))  # goal
    edges.append(((sink, 1.0),))  # lure
    edges.append(((sink, 1.0),))  # sink

    rewards = np.zeros(n)
    rewards[goal] = goal_reward
    rewards[lure] = lure_reward
    return EnvironmentSpec(
        n_states=n,
        feature_dim=n,
        features=np.eye(n),
        rewards=rewards,
        edges=tuple(edges),
        slate_size=1,
        fail_weight=fail_weight,
        p_end_fail=p_end_fail,
        p_end_exec=p_end_exec,
        start_state=0,
    )


def cascade_environment(
    rng: np.random.Generator,
    n_states: int = 5,
    slate_size: int = 2,
    feature_dim: int = 3,
    max_out_degree: int | None = None,
    accept_range: tuple[float, float] = (0.1, 0.9),
    reward_range: tuple[float, float] = (0.0, 1.0),
    p_end_exec: float = P_END_EXEC,
) -> EnvironmentSpec:
    """Small random instance under the cascade execution model.

    The acceptance table w_{s,a} is drawn uniformly from accept_range; slots are
    inspected in order, so execution of a slot depends only on the prefix up to
    it and never improves when the action moves later.
    """
    max_deg = max_out_degree or n_states - 1
    graph = random_digraph(n_states, 1, max_deg, *accept_range, rng)
    features = rng.standard_normal((n_states, feature_dim))
    rewards = rng.uniform(*reward_range, size=n_states)
    return spec_from_graph(
        graph, features, rewards, slate_size,
        fail_weight=1.0,
        p_end_exec=p_end_exec,
        execution_model="cascade",
    )


def with_onehot_features(spec: EnvironmentSpec) -> EnvironmentSpec:
    """Same environment with the identity feature table (d = N)."""
    return spec.replace(feature_dim=spec.n_states, features=np.eye(spec.n_states))
