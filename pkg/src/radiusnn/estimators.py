"""Position estimators: kNN/WkNN baselines, FRNN, ARNN and WARNN.

The functions here answer one query at a time and are the reference
semantics; :mod:`radiusnn.batch` evaluates whole test sets over
hyperparameter grids and is checked against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .dataset import FingerprintDataset
from .metrics import Metric, distances_to, features
from .neighbors import NeighborSet, adaptive_radius_query, knn_query, radius_query


class Family(str, Enum):
    KNN = "knn"
    FRNN = "frnn"
    ARNN = "arnn"
    WARNN = "warnn"

    @property
    def radius_based(self) -> bool:
        return self is not Family.KNN

    @property
    def adaptive(self) -> bool:
        return self in (Family.ARNN, Family.WARNN)


@dataclass(frozen=True)
class Weighting:
    """Neighbor weighting: ``unweighted``, ``idw`` with fixed decay, or ``adaptive``.

    The adaptive decay is ``alpha = 1 + d / r`` per neighbor, with ``r`` the
    neighbor's own radius.
    """

    kind: str = "unweighted"
    alpha: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("unweighted", "idw", "adaptive"):
            raise ValueError(f"unknown weighting {self.kind!r}")
        if self.kind == "idw" and not (self.alpha is not None and self.alpha > 0):
            raise ValueError("IDW weighting needs a positive decay factor")

    def __str__(self) -> str:
        if self.kind == "idw":
            return f"idw({self.alpha:g})"
        return self.kind


UNWEIGHTED = Weighting()
ADAPTIVE_IDW = Weighting("adaptive")


def idw(alpha: float) -> Weighting:
    return Weighting("idw", float(alpha))


@dataclass(frozen=True)
class EstimatorSpec:
    """One estimator configuration.

    ``k`` belongs to kNN, ``r_max`` to FRNN, and ``k_min``/``p``/``tau`` to
    the adaptive families. Hyperparameters left as ``None`` are tuned.
    ``train_weighting`` is the estimate used while learning radii.
    """

    family: Family
    metric: Metric
    weighting: Weighting = UNWEIGHTED
    k: int | None = None
    r_max: float | None = None
    k_min: int = 1
    p: float | None = None
    tau: float = 5.0
    train_weighting: Weighting = UNWEIGHTED

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "metric", Metric.parse(self.metric))
        if self.family is not Family.KNN and self.k is not None:
            raise ValueError("only kNN carries k")
        if self.family is not Family.FRNN and self.r_max is not None:
            raise ValueError("only FRNN carries r_max")
        if self.family is Family.FRNN and self.weighting != UNWEIGHTED:
            raise ValueError("FRNN uses the unweighted centroid")
        if self.family is Family.ARNN and self.weighting != UNWEIGHTED:
            raise ValueError("ARNN uses the unweighted centroid")
        if self.family is Family.WARNN and self.weighting.kind == "unweighted":
            raise ValueError("WARNN needs IDW or adaptive IDW weighting")
        if self.family is Family.KNN and self.weighting.kind == "adaptive":
            raise ValueError("adaptive decay needs per-sample radii")
        if self.train_weighting.kind == "adaptive":
            raise ValueError("radius training supports unweighted or fixed-decay IDW estimates")

    @property
    def hyper_name(self) -> str:
        return {Family.KNN: "k", Family.FRNN: "r_max"}.get(self.family, "p")

    @property
    def hyper(self) -> float | int | None:
        return getattr(self, self.hyper_name)

    def with_hyper(self, value: float | int) -> "EstimatorSpec":
        if self.family is Family.KNN:
            value = int(value)
        return replace(self, **{self.hyper_name: value})

    def describe(self) -> str:
        return f"{self.family.value.upper()}-{self.metric.value}-{self.weighting}"


@dataclass
class EstimateOutcome:
    """Either a position estimate or an explicit no-coverage marker."""

    position: np.ndarray | None
    neighbors_used: int = 0
    weights: np.ndarray | None = None
    indices: np.ndarray | None = None

    @property
    def estimated(self) -> bool:
        return self.position is not None

    @classmethod
    def no_coverage(cls) -> "EstimateOutcome":
        return cls(None, 0)


@dataclass
class RadiusModel:
    radii: np.ndarray
    train: FingerprintDataset
    spec: EstimatorSpec
    zero_radius_count: int = field(init=False)

    def __post_init__(self) -> None:
        self.radii = np.asarray(self.radii, dtype=float)
        if self.radii.shape != (len(self.train),) or np.any(self.radii < 0):
            raise ValueError("radii must be a non-negative vector of length N")
        self.zero_radius_count = int(np.count_nonzero(self.radii == 0.0))


def adaptive_decay(d: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Per-neighbor decay ``1 + d / r``; lies in [1, 2] whenever d <= r."""
    return 1.0 + np.asarray(d, dtype=float) / np.asarray(r, dtype=float)


def normalized_idw(d: np.ndarray, alpha: np.ndarray | float) -> np.ndarray:
    """Weights ``1 / d**alpha`` scaled to sum to one (all d > 0)."""
    w = 1.0 / np.asarray(d, dtype=float) ** alpha
    return w / w.sum()


def _combine(
    positions: np.ndarray, members: NeighborSet, weighting: Weighting, radii: np.ndarray | None = None
) -> EstimateOutcome:
    """Estimate from an ordered, non-empty neighbor set."""
    idx, d = members.indices, members.distances
    if weighting.kind == "unweighted":
        return EstimateOutcome(positions[idx].mean(axis=0), len(idx), None, idx)
    zero = d == 0.0
    if np.any(zero):
        # exact fingerprint matches dominate; 1/0**alpha is singular
        idx = idx[zero]
        w = np.full(len(idx), 1.0 / len(idx))
        return EstimateOutcome(positions[idx].mean(axis=0), len(idx), w, idx)
    alpha = weighting.alpha if weighting.kind == "idw" else adaptive_decay(d, radii[idx])
    w = normalized_idw(d, alpha)
    return EstimateOutcome(w @ positions[idx], len(idx), w, idx)


def knn_estimate(
    train: FingerprintDataset, metric: Metric, x: np.ndarray, k: int, weighting: Weighting = UNWEIGHTED
) -> EstimateOutcome:
    if weighting.kind == "adaptive":
        raise ValueError("adaptive decay needs per-sample radii")
    return _combine(train.positions, knn_query(train, metric, x, k), weighting)


def frnn_estimate(
    train: FingerprintDataset, metric: Metric, x: np.ndarray, r_max: float, weighting: Weighting = UNWEIGHTED
) -> EstimateOutcome:
    if weighting.kind == "adaptive":
        raise ValueError("adaptive decay needs per-sample radii")
    members = radius_query(train, metric, x, r_max)
    if len(members) == 0:
        return EstimateOutcome.no_coverage()
    return _combine(train.positions, members, weighting)


def k_max_for(p_percent: float, n: int, k_min: int) -> int:
    """Neighbor cap ``max(k_min, ceil(p% of n))``, at most ``n - 1``.

    ``p_percent`` is read as the decimal it prints as, so 0.3 % of 1000 is 3.
    """
    share = Fraction(repr(float(p_percent))) * n / 100
    return min(max(k_min, math.ceil(share)), n - 1)


def prefix_estimates(sorted_pos: np.ndarray, sorted_d: np.ndarray, weighting: Weighting) -> np.ndarray:
    """Estimates from the first K distance-sorted neighbors, for K = 1..len."""
    kcap = len(sorted_pos)
    if weighting.kind == "unweighted":
        return np.cumsum(sorted_pos, axis=0) / np.arange(1, kcap + 1, dtype=float)[:, None]
    if weighting.kind != "idw":
        raise ValueError("prefix estimates support unweighted or fixed-decay IDW only")
    # distances are sorted, so zero-distance neighbors form a prefix
    n_zero = int(np.count_nonzero(sorted_d == 0.0))
    if n_zero:
        zc = np.cumsum(sorted_pos[:n_zero], axis=0)
        z = np.minimum(np.arange(1, kcap + 1), n_zero)
        return zc[z - 1] / z[:, None].astype(float)
    w = 1.0 / sorted_d**weighting.alpha
    return np.cumsum(w[:, None] * sorted_pos, axis=0) / np.cumsum(w)[:, None]


def loo_radii(
    train: FingerprintDataset,
    metric: Metric,
    k_min: int,
    k_max_values: Sequence[int],
    taus: Sequence[float],
    inner: Weighting = UNWEIGHTED,
) -> np.ndarray:
    """Leave-one-out radii for every (tau, K_max) pair at once.

    Returns an array of shape ``(len(taus), len(k_max_values), N)``. For
    each training sample the K nearest other samples (K = k_min..K_max)
    estimate its position; the radius is the K-th sorted distance of the
    largest K whose 3D error is within tau, or 0 if none is.
    """
    n = len(train)
    if n < 2:
        raise ValueError("need at least two training samples")
    if not 1 <= k_min <= n - 1:
        raise ValueError(f"K_min={k_min} exceeds N-1={n - 1}")
    kmaxes = np.asarray(k_max_values, dtype=int)
    if np.any(kmaxes < k_min) or np.any(kmaxes > n - 1):
        raise ValueError("every K_max must lie in [K_min, N-1]")
    taus = np.asarray(taus, dtype=float)
    kcap = int(kmaxes.max())

    metric = Metric.parse(metric)
    feats = features(metric, train.rss, train.not_detected_fill)
    pos = train.positions
    out = np.zeros((len(taus), len(kmaxes), n))
    ks = np.arange(kcap)
    for i in range(n):
        d = distances_to(metric, feats, feats[i], strict=False)
        others = np.delete(np.arange(n), i)
        order = others[np.argsort(d[others], kind="stable")][:kcap]
        sorted_d = d[order]
        diff = prefix_estimates(pos[order], sorted_d, inner) - pos[i]
        err = np.sqrt(np.sum(diff * diff, axis=1))
        for t, tau in enumerate(taus):
            ok = err <= tau
            ok[: k_min - 1] = False
            last = np.maximum.accumulate(np.where(ok, ks, -1))
            pick = last[kmaxes - 1]
            out[t, :, i] = np.where(pick >= 0, sorted_d[np.maximum(pick, 0)], 0.0)
    return out


def train_radii(
    train: FingerprintDataset,
    metric: Metric,
    k_min: int,
    p_percent: float,
    tau: float,
    inner: Weighting = UNWEIGHTED,
    spec: EstimatorSpec | None = None,
) -> RadiusModel:
    """Learn one radius per training sample (leave-one-out self-estimation)."""
    if k_min < 1:
        raise ValueError("K_min must be >= 1")
    if not p_percent > 0:
        raise ValueError("p must be positive")
    if not tau > 0:
        raise ValueError("error threshold must be positive")
    n = len(train)
    if n < 2:
        raise ValueError("need at least two training samples")
    if k_min > n - 1:
        raise ValueError(f"K_min={k_min} exceeds N-1={n - 1}")
    kmax = k_max_for(p_percent, n, k_min)
    radii = loo_radii(train, metric, k_min, [kmax], [tau], inner)[0, 0]
    if spec is None:
        spec = EstimatorSpec(Family.ARNN, metric, k_min=k_min, p=p_percent, tau=tau, train_weighting=inner)
    return RadiusModel(radii, train, spec)


def arnn_estimate(model: RadiusModel, x: np.ndarray) -> EstimateOutcome:
    members = adaptive_radius_query(model.train, model.radii, model.spec.metric, x)
    if len(members) == 0:
        return EstimateOutcome.no_coverage()
    return _combine(model.train.positions, members, UNWEIGHTED)


def warnn_estimate(model: RadiusModel, x: np.ndarray, weighting: Weighting) -> EstimateOutcome:
    if weighting.kind == "unweighted":
        raise ValueError("WARNN needs IDW or adaptive IDW weighting")
    members = adaptive_radius_query(model.train, model.radii, model.spec.metric, x)
    if len(members) == 0:
        return EstimateOutcome.no_coverage()
    return _combine(model.train.positions, members, weighting, model.radii)


def estimate(spec: EstimatorSpec, train: FingerprintDataset, x: np.ndarray,
             model: RadiusModel | None = None) -> EstimateOutcome:
    """Dispatch one query to the estimator ``spec`` describes (hyper set)."""
    if spec.family is Family.KNN:
        return knn_estimate(train, spec.metric, x, spec.k, spec.weighting)
    if spec.family is Family.FRNN:
        return frnn_estimate(train, spec.metric, x, spec.r_max)
    if model is None:
        model = train_radii(train, spec.metric, spec.k_min, spec.p, spec.tau, spec.train_weighting, spec)
    if spec.family is Family.ARNN:
        return arnn_estimate(model, x)
    return warnn_estimate(model, x, spec.weighting)


_CATALOG: dict[str, EstimatorSpec] = {
    "M1": EstimatorSpec(Family.KNN, Metric.CITYBLOCK, UNWEIGHTED),
    "M2": EstimatorSpec(Family.KNN, Metric.CITYBLOCK, idw(1)),
    "M3": EstimatorSpec(Family.KNN, Metric.CITYBLOCK, idw(2)),
    "M14": EstimatorSpec(Family.FRNN, Metric.EUCLIDEAN),
    "M15": EstimatorSpec(Family.FRNN, Metric.CITYBLOCK),
    "M16": EstimatorSpec(Family.FRNN, Metric.COSINE),
    "M17": EstimatorSpec(Family.ARNN, Metric.EUCLIDEAN),
    "M18": EstimatorSpec(Family.ARNN, Metric.CITYBLOCK),
    "M19": EstimatorSpec(Family.ARNN, Metric.COSINE),
    "M20": EstimatorSpec(Family.WARNN, Metric.EUCLIDEAN, idw(2)),
    "M21": EstimatorSpec(Family.WARNN, Metric.EUCLIDEAN, ADAPTIVE_IDW),
    "M22": EstimatorSpec(Family.WARNN, Metric.CITYBLOCK, idw(2)),
    "M23": EstimatorSpec(Family.WARNN, Metric.CITYBLOCK, ADAPTIVE_IDW),
    "M24": EstimatorSpec(Family.WARNN, Metric.COSINE, idw(2)),
    "M25": EstimatorSpec(Family.WARNN, Metric.COSINE, ADAPTIVE_IDW),
}

METHOD_IDS: tuple[str, ...] = tuple(_CATALOG)


def method_catalog() -> list[tuple[str, EstimatorSpec]]:
    return list(_CATALOG.items())


def lookup(method_id: str) -> EstimatorSpec:
    key = method_id.strip().upper()
    try:
        return _CATALOG[key]
    except KeyError:
        raise KeyError(f"unknown method id {method_id!r}; known: {', '.join(METHOD_IDS)}") from None
