"""End-to-end evaluation and threshold-sweep runs driven by a RunConfig.

Work is split into (dataset, metric) tasks so the test-to-train distance
matrix and learned radii are shared by every method using that metric.
Results are gathered in task order, so output never depends on the
worker count.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar

from .batch import QueryContext
from .config import DatasetConfig, RunConfig
from .dataset import DataError, FingerprintDataset, split
from .estimators import EstimatorSpec, lookup
from .evaluation import (
    EvaluationReport,
    MethodRun,
    summarize,
    write_outcomes_csv,
    write_sweep_csv,
    write_trace_csv,
)
from .metrics import Metric
from .tuning import InfeasibleError, SearchGrid, SweepRow, TraceRow, evaluate_spec, sweep_tau, tune

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Sequence[T], workers: int) -> list[R]:
    """``map`` over a process pool, results in input order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def method_spec(method_id: str, config: RunConfig) -> EstimatorSpec:
    spec = lookup(method_id)
    if spec.family.adaptive:
        spec = replace(spec, tau=config.tau, k_min=config.k_min, train_weighting=config.train_weighting)
    return spec


@dataclass
class CellResult:
    dataset: str
    method: str
    status: str
    message: str = ""
    run: MethodRun | None = None
    trace: list[TraceRow] = field(default_factory=list)


@dataclass
class _Task:
    dataset: str
    metric: Metric
    methods: list[str]
    train: FingerprintDataset
    test: FingerprintDataset
    config: RunConfig


def _run_task(task: _Task) -> list[CellResult]:
    cfg = task.config
    out = []
    if cfg.tune_on == "validation":
        fit, val = split(task.train, cfg.validation_fraction, cfg.seed)
        tune_ctx = QueryContext(fit, val, task.metric)
    else:
        fit, val = task.train, task.test
        tune_ctx = None
    test_ctx = QueryContext(task.train, task.test, task.metric)
    for method in task.methods:
        spec = method_spec(method, cfg)
        try:
            if tune_ctx is None:
                tuned = tune(method, fit, val, cfg.grid, spec=spec, ctx=test_ctx)
                outcomes = tuned.outcomes
            else:
                tuned = tune(method, fit, val, cfg.grid, spec=spec, ctx=tune_ctx)
                outcomes = evaluate_spec(tuned.spec, task.train, task.test, ctx=test_ctx)
        except InfeasibleError as exc:
            out.append(CellResult(task.dataset, method, "infeasible", str(exc)))
            continue
        run = MethodRun(task.dataset, method, tuned.chosen_hyper, outcomes.outcomes(0), task.test.positions)
        out.append(CellResult(task.dataset, method, "ok", run=run, trace=tuned.trace))
    return out


@dataclass
class EvaluationResult:
    report: EvaluationReport | None
    cells: list[CellResult]
    dataset_errors: dict[str, str]
    files: list[Path]

    @property
    def exit_code(self) -> int:
        if self.dataset_errors:
            return 2
        if any(c.status != "ok" for c in self.cells):
            return 3
        return 0


def load_datasets(
    datasets: Iterable[DatasetConfig], seed: int
) -> tuple[dict[str, tuple[FingerprintDataset, FingerprintDataset]], dict[str, str]]:
    loaded, errors = {}, {}
    for ds in datasets:
        try:
            loaded[ds.name] = ds.load(seed)
        except DataError as exc:
            log.error("dataset %s: %s", ds.name, exc)
            errors[ds.name] = str(exc)
    return loaded, errors


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def run_evaluate(config: RunConfig) -> EvaluationResult:
    loaded, ds_errors = load_datasets(config.datasets, config.seed)
    tasks = []
    for ds in config.datasets:
        if ds.name not in loaded:
            continue
        train, test = loaded[ds.name]
        by_metric: dict[Metric, list[str]] = {}
        for m in config.methods:
            by_metric.setdefault(lookup(m).metric, []).append(m)
        for metric, methods in by_metric.items():
            tasks.append(_Task(ds.name, metric, methods, train, test, config))

    results = ordered_map(_run_task, tasks, config.worker_count())
    by_key = {(c.dataset, c.method): c for group in results for c in group}
    cells = [
        by_key[(ds.name, m)] for ds in config.datasets if ds.name in loaded for m in config.methods
    ]

    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    files: list[Path] = []
    runs = [c.run for c in cells if c.run is not None]
    report = summarize(runs) if runs else None
    if report is not None:
        files += [
            report.write_csv(out / "report.csv"),
            report.write_json(out / "report.json"),
            report.write_summary_csv(out / "summary.csv"),
        ]
    (out / "traces").mkdir(exist_ok=True)
    for c in cells:
        if c.trace:
            name = f"{_safe(c.dataset)}__{c.method}.csv"
            files.append(write_trace_csv(out / "traces" / name, (t.as_tuple() for t in c.trace)))
    if config.dump_outcomes:
        (out / "outcomes").mkdir(exist_ok=True)
        for c in cells:
            if c.run is not None:
                name = f"{_safe(c.dataset)}__{c.method}.csv"
                files.append(write_outcomes_csv(out / "outcomes" / name, c.run))

    result = EvaluationResult(report, cells, ds_errors, files)
    manifest = {
        "status": "ok" if result.exit_code == 0 else "failed",
        "exit_code": result.exit_code,
        "datasets": [
            {"name": ds.name, "status": "error" if ds.name in ds_errors else "ok",
             "message": ds_errors.get(ds.name, "")}
            for ds in config.datasets
        ],
        "cells": [
            {"dataset": c.dataset, "method": c.method, "status": c.status, "message": c.message}
            for c in cells
        ],
        "files": [str(p.relative_to(out)) for p in files],
    }
    (out / "MANIFEST.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return result


@dataclass
class _SweepTask:
    dataset: str
    method: str
    spec: EstimatorSpec
    train: FingerprintDataset
    test: FingerprintDataset
    taus: list[float]
    grid: SearchGrid


def _run_sweep(task: _SweepTask) -> list[SweepRow]:
    return sweep_tau(task.method, task.train, task.test, task.taus, task.grid, spec=task.spec)


def run_sweep(config: RunConfig, method_id: str, taus: Sequence[float]) -> tuple[dict[str, Path], dict[str, str]]:
    """Sweep the error threshold for one method on every configured dataset."""
    spec = method_spec(method_id, config)
    if not spec.family.adaptive:
        raise ValueError(
            f"{method_id}: sweep requires a radius-based method with learned radii (ARNN or WARNN)"
        )
    loaded, ds_errors = load_datasets(config.datasets, config.seed)
    names = [ds.name for ds in config.datasets if ds.name in loaded]
    tasks = [
        _SweepTask(n, method_id, spec, *loaded[n], list(taus), config.grid) for n in names
    ]
    results = ordered_map(_run_sweep, tasks, config.worker_count())
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, rows in zip(names, results):
        files[name] = write_sweep_csv(out / f"sweep_{_safe(name)}__{method_id}.csv", rows)
    return files, ds_errors
