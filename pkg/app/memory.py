"""Experience replay with FIFO eviction and uniform sampling with replacement."""

from typing import Iterator

import numpy as np

from app.core.types import TransitionRecord
from app.errors import ConfigError, NotReadyError


class ReplayBuffer:
    """Bounded FIFO of transition records, stored as a ring for O(1) random access."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError("must be positive", field="buffer_capacity")
        self.capacity = capacity
        self._records: list[TransitionRecord] = []
        # slot of the oldest record once the ring is full
        self._head = 0

    def push(self, record: TransitionRecord) -> None:
        """Append; the oldest record is evicted once capacity is reached."""
        if len(self._records) < self.capacity:
            self._records.append(record)
            return
        self._records[self._head] = record
        self._head = (self._head + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[TransitionRecord]:
        if batch_size == 0:
            return []
        if not self._records:
            raise NotReadyError("cannot sample from an empty replay buffer")
        idx = rng.integers(0, len(self._records), size=batch_size)
        return [self._records[i] for i in idx]

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[TransitionRecord]:
        """Oldest first."""
        yield from self._records[self._head:]
        yield from self._records[:self._head]
