"""Exhaustive neighbor queries over a training set.

All queries scan every training sample; results are ordered by ascending
distance with ties broken by ascending training index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import FingerprintDataset
from .metrics import Metric, distances_to, features


@dataclass(frozen=True)
class NeighborSet:
    indices: np.ndarray
    distances: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def entries(self) -> list[tuple[int, float]]:
        return [(int(i), float(d)) for i, d in zip(self.indices, self.distances)]

    @classmethod
    def from_mask(cls, dist: np.ndarray, mask: np.ndarray) -> "NeighborSet":
        idx = np.flatnonzero(mask)
        order = np.argsort(dist[idx], kind="stable")
        return cls(idx[order], dist[idx[order]])


def query_distances(train: FingerprintDataset, metric: Metric, x: np.ndarray) -> np.ndarray:
    """Distances from raw RSS vector ``x`` to every training fingerprint."""
    metric = Metric.parse(metric)
    fill = train.not_detected_fill
    return distances_to(metric, features(metric, train.rss, fill), features(metric, x, fill), strict=False)


def knn_query(train: FingerprintDataset, metric: Metric, x: np.ndarray, k: int) -> NeighborSet:
    n = len(train)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    dist = query_distances(train, metric, x)
    order = np.argsort(dist, kind="stable")[:k]
    return NeighborSet(order, dist[order])


def radius_query(train: FingerprintDataset, metric: Metric, x: np.ndarray, r: float) -> NeighborSet:
    if r < 0:
        raise ValueError(f"radius must be non-negative, got {r}")
    dist = query_distances(train, metric, x)
    return NeighborSet.from_mask(dist, dist <= r)


def adaptive_radius_query(
    train: FingerprintDataset, radii: np.ndarray, metric: Metric, x: np.ndarray
) -> NeighborSet:
    """All training samples whose own radius reaches ``x``."""
    radii = np.asarray(radii, dtype=float)
    if radii.shape != (len(train),):
        raise ValueError(f"expected {len(train)} radii, got shape {radii.shape}")
    if np.any(radii < 0):
        raise ValueError("radii must be non-negative")
    dist = query_distances(train, metric, x)
    return NeighborSet.from_mask(dist, dist <= radii)
