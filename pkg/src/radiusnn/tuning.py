"""Exhaustive hyperparameter search under a minimum-coverage constraint."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .batch import GridOutcomes, QueryContext, adaptive_grid, frnn_grid, knn_grid
from .dataset import FingerprintDataset
from .estimators import EstimatorSpec, Family, k_max_for, lookup
from .metrics import Metric


class InfeasibleError(RuntimeError):
    """No grid value meets the coverage constraint."""


def _steps(start: int, stop: int, step: int, scale: int = 1) -> list[float]:
    # integer stepping avoids accumulated float drift in long grids
    return [v / scale for v in range(start, stop + 1, step)]


def default_k_grid() -> list[int]:
    return list(range(1, 22)) + list(range(23, 52, 2))


def default_r_max_grids() -> dict[Metric, list[float]]:
    return {
        Metric.EUCLIDEAN: _steps(60, 260, 2),
        Metric.CITYBLOCK: _steps(150, 300, 2) + _steps(305, 1000, 5) + _steps(1010, 2350, 10),
        Metric.COSINE: _steps(10, 98, 2, 1000) + _steps(100, 500, 5, 1000),
    }


def default_p_grid() -> list[float]:
    return _steps(1, 250, 1, 10) + _steps(26, 40, 1)


def default_tau_grid() -> list[float]:
    return _steps(3, 11, 1)


@dataclass
class SearchGrid:
    k_grid: list[int] = field(default_factory=default_k_grid)
    r_max_grid: dict[Metric, list[float]] = field(default_factory=default_r_max_grids)
    p_grid: list[float] = field(default_factory=default_p_grid)
    tau_grid: list[float] = field(default_factory=default_tau_grid)
    min_coverage: float = 90.0

    def values_for(self, spec: EstimatorSpec) -> list[float]:
        if spec.family is Family.KNN:
            values = list(self.k_grid)
        elif spec.family is Family.FRNN:
            if spec.metric not in self.r_max_grid:
                raise ValueError(f"no r_max grid for metric {spec.metric.value}")
            values = list(self.r_max_grid[spec.metric])
        else:
            values = list(self.p_grid)
        if not values:
            raise ValueError(f"empty search grid for {spec.family.value}")
        return sorted(set(values))


@dataclass
class TraceRow:
    hyper: float
    mean_error: float | None
    coverage: float
    feasible: bool

    def as_tuple(self) -> tuple[float, float | None, float, bool]:
        return (self.hyper, self.mean_error, self.coverage, self.feasible)


@dataclass
class TunedMethod:
    method_id: str
    spec: EstimatorSpec
    chosen_hyper: float | int
    mean_error: float
    coverage: float
    trace: list[TraceRow]
    outcomes: GridOutcomes


def _evaluate(
    spec: EstimatorSpec, ctx: QueryContext, values: Sequence[float]
) -> GridOutcomes:
    if spec.family is Family.KNN:
        return knn_grid(ctx, [int(v) for v in values], spec.weighting)
    if spec.family is Family.FRNN:
        return frnn_grid(ctx, values)
    n = len(ctx.train)
    kmaxes = [k_max_for(p, n, spec.k_min) for p in values]
    radii = ctx.radii_table(spec.k_min, kmaxes, [spec.tau], spec.train_weighting)[0]
    out = adaptive_grid(ctx, radii, spec.weighting)
    out.hyper = np.asarray(values, dtype=float)
    return out


def _select(
    values: Sequence[float], outcomes: GridOutcomes, truth: np.ndarray, min_coverage: float
) -> tuple[int | None, list[TraceRow]]:
    errs = outcomes.mean_errors(truth)
    cov = outcomes.coverage()
    trace = []
    best: int | None = None
    for h, v in enumerate(values):
        err = None if np.isnan(errs[h]) else float(errs[h])
        ok = err is not None and cov[h] >= min_coverage
        trace.append(TraceRow(v, err, float(cov[h]), ok))
        # strict improvement keeps the smaller value on ties (values ascend)
        if ok and (best is None or err < trace[best].mean_error):
            best = h
    return best, trace


def evaluate_spec(
    spec: EstimatorSpec, train: FingerprintDataset, test: FingerprintDataset,
    ctx: QueryContext | None = None,
) -> GridOutcomes:
    """Outcomes of a fully specified estimator on the whole test set."""
    if spec.hyper is None:
        raise ValueError(f"{spec.describe()} has no {spec.hyper_name} set")
    ctx = ctx or QueryContext(train, test, spec.metric)
    return _evaluate(spec, ctx, [spec.hyper])


def tune(
    method_id: str,
    train: FingerprintDataset,
    test: FingerprintDataset,
    grid: SearchGrid | None = None,
    *,
    spec: EstimatorSpec | None = None,
    tau: float | None = None,
    ctx: QueryContext | None = None,
) -> TunedMethod:
    """Evaluate every grid value and keep the lowest mean error that meets coverage.

    Ties go to the smaller value. Infeasible values stay in the trace.
    """
    grid = grid or SearchGrid()
    spec = spec or lookup(method_id)
    if tau is not None and spec.family.adaptive:
        spec = replace(spec, tau=tau)
    values = grid.values_for(spec)
    if spec.family is Family.KNN:
        values = [v for v in values if v <= len(train)]
        if not values:
            raise InfeasibleError(f"{method_id}: every k exceeds the {len(train)} training samples")
    ctx = ctx or QueryContext(train, test, spec.metric)
    outcomes = _evaluate(spec, ctx, values)
    best, trace = _select(values, outcomes, test.positions, grid.min_coverage)
    if best is None:
        top = max(t.coverage for t in trace)
        raise InfeasibleError(
            f"{method_id}: no feasible hyperparameter (best coverage {top:.2f}% < {grid.min_coverage:g}%)"
        )
    chosen = int(values[best]) if spec.family is Family.KNN else values[best]
    return TunedMethod(
        method_id,
        spec.with_hyper(chosen),
        chosen,
        trace[best].mean_error,
        trace[best].coverage,
        trace,
        outcomes.take(best),
    )


@dataclass
class SweepRow:
    tau: float
    p: float | None
    mean_error: float | None
    coverage: float
    feasible: bool


def sweep_tau(
    method_id: str,
    train: FingerprintDataset,
    test: FingerprintDataset,
    taus: Sequence[float],
    grid: SearchGrid | None = None,
    *,
    spec: EstimatorSpec | None = None,
    ctx: QueryContext | None = None,
) -> list[SweepRow]:
    """Retune p for every error threshold and report the best feasible result.

    An infeasible threshold keeps its row, carrying the highest coverage any
    p reached.
    """
    grid = grid or SearchGrid()
    spec = spec or lookup(method_id)
    if not spec.family.adaptive:
        raise ValueError("sweep requires a radius-based method with learned radii (ARNN or WARNN)")
    if len(taus) == 0:
        raise ValueError("empty threshold grid")
    values = grid.values_for(spec)
    n = len(train)
    kmaxes = [k_max_for(p, n, spec.k_min) for p in values]
    ctx = ctx or QueryContext(train, test, spec.metric)
    table = ctx.radii_table(spec.k_min, kmaxes, taus, spec.train_weighting)
    rows = []
    for t, tau in enumerate(taus):
        outcomes = adaptive_grid(ctx, table[t], spec.weighting, values)
        best, trace = _select(values, outcomes, test.positions, grid.min_coverage)
        if best is None:
            best = int(np.argmax([r.coverage for r in trace]))
            feasible = False
        else:
            feasible = True
        row = trace[best]
        rows.append(SweepRow(float(tau), values[best], row.mean_error, row.coverage, feasible))
    return rows
