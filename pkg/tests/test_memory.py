from __future__ import annotations

import numpy as np
import pytest
from scipy.stats import chisquare

from app.core.types import TransitionRecord
from app.errors import ConfigError, NotReadyError
from app.memory import ReplayBuffer


def _record(i: int) -> TransitionRecord:
    return TransitionRecord(state=i, slate=(i,), executed=i, reward=float(i), next_state=i, terminal=False)


def test_fifo_eviction_keeps_the_newest() -> None:
    buf = ReplayBuffer(3)
    for i in range(5):
        buf.push(_record(i))
    assert len(buf) == 3
    assert [r.state for r in buf] == [2, 3, 4]


def test_ring_wraps_more_than_once(rng) -> None:
    buf = ReplayBuffer(4)
    for i in range(11):
        buf.push(_record(i))
    assert [r.state for r in buf] == [7, 8, 9, 10]
    assert {r.state for r in buf.sample(200, rng)} == {7, 8, 9, 10}


def test_sample_returns_stored_records(rng) -> None:
    buf = ReplayBuffer(10)
    for i in range(4):
        buf.push(_record(i))
    batch = buf.sample(32, rng)
    assert len(batch) == 32
    assert {r.state for r in batch} <= {0, 1, 2, 3}


def test_sampling_is_uniform() -> None:
    rng = np.random.default_rng(8)
    buf = ReplayBuffer(5)
    for i in range(5):
        buf.push(_record(i))
    counts = np.bincount([r.state for r in buf.sample(50_000, rng)], minlength=5)
    assert chisquare(counts).pvalue > 0.01


def test_empty_buffer_and_zero_batch(rng) -> None:
    buf = ReplayBuffer(2)
    assert buf.sample(0, rng) == []
    with pytest.raises(NotReadyError):
        buf.sample(1, rng)


def test_capacity_must_be_positive() -> None:
    with pytest.raises(ConfigError):
        ReplayBuffer(0)
