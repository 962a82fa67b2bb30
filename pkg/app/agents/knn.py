"""Exact nearest-neighbour lookup over a state's candidate actions."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from app.core.types import ActionId
from app.env.spec import EnvironmentSpec
from app.errors import DomainError


class KnnIndex:
    """Candidate action ids with their feature rows; squared Euclidean metric."""

    def __init__(self, ids: Sequence[int], points: np.ndarray):
        ids = np.asarray(ids, dtype=np.int64)
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or len(points) != len(ids):
            raise DomainError("one feature row per id is required")
        # ascending ids, so a stable sort on distance breaks ties by id
        order = np.argsort(ids, kind="stable")
        self.ids = ids[order]
        self.points = points[order]

    @classmethod
    def from_candidates(cls, spec: EnvironmentSpec, candidates: Sequence[int]) -> KnnIndex:
        return cls(candidates, spec.features[np.asarray(candidates, dtype=np.int64)])

    def __len__(self) -> int:
        return len(self.ids)

    def query(self, proto: np.ndarray, k: int) -> list[ActionId]:
        """The min(k, n) ids closest to proto, nearest first, ties by ascending id."""
        return self.query_many(np.asarray(proto, dtype=np.float64)[None, :], k)[0]

    def query_many(self, protos: np.ndarray, k: int) -> list[list[ActionId]]:
        """query for every row of protos at once."""
        if len(self.ids) == 0:
            raise DomainError("nearest-neighbour query on an empty index")
        if k < 1:
            raise DomainError(f"k must be >= 1, got {k}")
        diff = self.points[None, :, :] - np.asarray(protos, dtype=np.float64)[:, None, :]
        dist = np.einsum("mnd,mnd->mn", diff, diff)
        order = np.argsort(dist, axis=1, kind="stable")[:, :k]
        return [[int(a) for a in row] for row in self.ids[order]]


def knn_query(index: KnnIndex, proto: np.ndarray, k: int) -> list[ActionId]:
    return index.query(proto, k)
