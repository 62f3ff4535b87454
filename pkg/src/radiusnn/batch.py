"""Whole-test-set evaluation over hyperparameter grids.

One dense test-to-train distance matrix per metric is computed once and
every grid value is answered from it. Prefix sums over distance-sorted
neighbors make a whole k or r_max grid cost about as much as one value.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .dataset import FingerprintDataset
from .estimators import UNWEIGHTED, EstimateOutcome, Weighting, loo_radii, prefix_estimates
from .metrics import Metric, distance_matrix, features


@dataclass
class GridOutcomes:
    """Outcomes of one estimator for every (hyper value, test sample).

    ``estimates`` is ``(H, m, 3)`` with NaN rows where no estimate exists;
    ``neighbors_used`` is ``(H, m)`` and zero exactly for no coverage.
    """

    hyper: np.ndarray
    estimates: np.ndarray
    neighbors_used: np.ndarray

    @property
    def covered(self) -> np.ndarray:
        return self.neighbors_used > 0

    def errors(self, truth: np.ndarray) -> np.ndarray:
        diff = self.estimates - truth[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=2))

    def mean_errors(self, truth: np.ndarray) -> np.ndarray:
        err = self.errors(truth)
        out = np.full(len(self.hyper), np.nan)
        for h in range(len(self.hyper)):
            mask = self.covered[h]
            if mask.any():
                out[h] = float(np.mean(err[h, mask]))
        return out

    def coverage(self) -> np.ndarray:
        m = self.neighbors_used.shape[1]
        return 100.0 * np.count_nonzero(self.covered, axis=1) / m

    def outcomes(self, h: int) -> list[EstimateOutcome]:
        return [
            EstimateOutcome(self.estimates[h, j].copy(), int(self.neighbors_used[h, j]))
            if self.neighbors_used[h, j] > 0
            else EstimateOutcome.no_coverage()
            for j in range(self.estimates.shape[1])
        ]

    def take(self, h: int) -> "GridOutcomes":
        return GridOutcomes(self.hyper[h : h + 1], self.estimates[h : h + 1], self.neighbors_used[h : h + 1])


class QueryContext:
    """Cached test-to-train distances for one (train, test, metric) triple."""

    def __init__(self, train: FingerprintDataset, test: FingerprintDataset, metric: Metric):
        if train.ap_count != test.ap_count:
            raise ValueError(
                f"AP count mismatch: train has {train.ap_count}, test has {test.ap_count}"
            )
        self.train = train
        self.test = test
        self.metric = Metric.parse(metric)
        self._radii: dict[tuple, np.ndarray] = {}

    def radii_table(
        self, k_min: int, k_max_values: Sequence[int], taus: Sequence[float], inner: Weighting = UNWEIGHTED
    ) -> np.ndarray:
        """Memoized leave-one-out radii, shape ``(len(taus), len(k_max_values), N)``."""
        key = (k_min, tuple(int(k) for k in k_max_values), tuple(float(t) for t in taus), inner)
        if key not in self._radii:
            self._radii[key] = loo_radii(self.train, self.metric, k_min, k_max_values, taus, inner)
        return self._radii[key]

    @cached_property
    def distances(self) -> np.ndarray:
        fill = self.train.not_detected_fill
        return distance_matrix(
            self.metric,
            features(self.metric, self.test.rss, fill),
            features(self.metric, self.train.rss, fill),
            strict=False,
        )

    @property
    def m(self) -> int:
        return len(self.test)


def knn_grid(ctx: QueryContext, ks: Sequence[int], weighting: Weighting) -> GridOutcomes:
    ks = np.asarray(ks, dtype=int)
    n = len(ctx.train)
    if ks.size == 0 or ks.min() < 1 or ks.max() > n:
        raise ValueError(f"every k must lie in [1, {n}]")
    kcap = int(ks.max())
    pos = ctx.train.positions
    est = np.empty((len(ks), ctx.m, 3))
    for j, d in enumerate(ctx.distances):
        order = np.argsort(d, kind="stable")[:kcap]
        est[:, j] = prefix_estimates(pos[order], d[order], weighting)[ks - 1]
    used = np.broadcast_to(ks[:, None], (len(ks), ctx.m)).copy()
    return GridOutcomes(ks.astype(float), est, used)


def frnn_grid(ctx: QueryContext, radii: Sequence[float]) -> GridOutcomes:
    radii = np.asarray(radii, dtype=float)
    pos = ctx.train.positions
    est = np.full((len(radii), ctx.m, 3), np.nan)
    used = np.zeros((len(radii), ctx.m), dtype=int)
    for j, d in enumerate(ctx.distances):
        order = np.argsort(d, kind="stable")
        sd = d[order]
        prefix = np.cumsum(pos[order], axis=0)
        counts = np.searchsorted(sd, radii, side="right")
        hit = counts > 0
        used[:, j] = counts
        est[hit, j] = prefix[counts[hit] - 1] / counts[hit, None]
    return GridOutcomes(radii, est, used)


def adaptive_grid(
    ctx: QueryContext, radii_table: np.ndarray, weighting: Weighting, hyper: Sequence[float] | None = None
) -> GridOutcomes:
    """ARNN/WARNN outcomes for each row of ``radii_table`` (shape ``(H, N)``)."""
    radii_table = np.atleast_2d(np.asarray(radii_table, dtype=float))
    n_h = radii_table.shape[0]
    pos = ctx.train.positions
    reach = radii_table.max(axis=0)
    est = np.full((n_h, ctx.m, 3), np.nan)
    used = np.zeros((n_h, ctx.m), dtype=int)
    for j, d in enumerate(ctx.distances):
        cand = np.flatnonzero(d <= reach)
        if cand.size == 0:
            continue
        dc, rc, pc = d[cand], radii_table[:, cand], pos[cand]
        adm = dc[None, :] <= rc
        count = adm.sum(axis=1)
        if weighting.kind == "unweighted":
            w = adm.astype(float)
        else:
            zero = adm & (dc == 0.0)[None, :]
            nz = dc > 0.0
            w = np.zeros_like(rc)
            if weighting.kind == "idw":
                w[:, nz] = 1.0 / dc[nz] ** weighting.alpha
            else:
                # admitted members with d > 0 always have r > 0; others get a dummy decay
                adm_nz = adm[:, nz]
                r_safe = np.where(adm_nz, rc[:, nz], 1.0)
                alpha = np.where(adm_nz, 1.0 + dc[nz][None, :] / r_safe, 1.0)
                w[:, nz] = 1.0 / dc[nz][None, :] ** alpha
            w = np.where(adm, w, 0.0)
            has_zero = zero.any(axis=1)
            if has_zero.any():
                w[has_zero] = zero[has_zero].astype(float)
                count = np.where(has_zero, zero.sum(axis=1), count)
        hit = count > 0
        if hit.any():
            wh = w[hit]
            est[hit, j] = np.einsum("hn,nc->hc", wh, pc) / wh.sum(axis=1)[:, None]
        used[:, j] = count
    hyper_arr = np.arange(n_h, dtype=float) if hyper is None else np.asarray(hyper, dtype=float)
    return GridOutcomes(hyper_arr, est, used)
