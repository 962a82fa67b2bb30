from __future__ import annotations

import os

os.environ.setdefault("SHOW_PROGRESS", "0")

import numpy as np
import pytest

from app.env.spec import EnvironmentSpec


def make_spec(**overrides) -> EnvironmentSpec:
    """Three states with hand-picked weights and rewards.

    0 -> {1: 1.0, 2: 0.5}; 1 -> {0: 1.0, 2: 1.0}; 2 -> {0: 0.25}
    """
    fields = dict(
        n_states=3,
        feature_dim=2,
        features=np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
        rewards=np.array([0.0, 1.0, 2.0]),
        edges=(((1, 1.0), (2, 0.5)), ((0, 1.0), (2, 1.0)), ((0, 0.25),)),
        slate_size=2,
        fail_weight=0.5,
        p_end_fail=0.2,
        p_end_exec=0.1,
    )
    fields.update(overrides)
    return EnvironmentSpec(**fields)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def small_spec() -> EnvironmentSpec:
    return make_spec()
