"""Positioning error, coverage ratio, and cross-dataset report tables."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .estimators import EstimateOutcome

REPORT_COLUMNS = ("dataset", "method", "mean_error_m", "coverage_pct", "hyper")


def positioning_error(estimate: np.ndarray, truth: np.ndarray) -> float:
    """3D Euclidean distance between an estimate and the true position."""
    diff = np.asarray(estimate, dtype=float) - np.asarray(truth, dtype=float)
    return float(np.sqrt(np.sum(diff * diff)))


def coverage_ratio(outcomes: Sequence[EstimateOutcome]) -> float:
    """Percentage of outcomes that carry an estimate."""
    if len(outcomes) == 0:
        raise ValueError("coverage ratio of an empty outcome list")
    hits = sum(1 for o in outcomes if o.estimated)
    return 100.0 * hits / len(outcomes)


@dataclass
class MethodRun:
    """Raw per-test-sample outcomes of one method on one dataset."""

    dataset: str
    method: str
    hyper: float | int | None
    outcomes: list[EstimateOutcome]
    truths: np.ndarray

    def errors(self) -> list[float | None]:
        return [
            positioning_error(o.position, t) if o.estimated else None
            for o, t in zip(self.outcomes, self.truths)
        ]

    def mean_error(self) -> float | None:
        errs = np.array([e for e in self.errors() if e is not None])
        return float(np.mean(errs)) if errs.size else None


@dataclass
class Cell:
    mean_error: float | None
    coverage: float
    hyper: float | int | None


@dataclass
class EvaluationReport:
    datasets: list[str]
    methods: list[str]
    per_dataset: dict[str, dict[str, Cell]]
    averages: dict[str, float] = field(default_factory=dict)
    ranks: dict[str, int] = field(default_factory=dict)
    coverage_averages: dict[str, float] = field(default_factory=dict)

    def rows(self) -> Iterable[dict]:
        for ds in self.datasets:
            for method in self.methods:
                cell = self.per_dataset.get(ds, {}).get(method)
                if cell is None:
                    continue
                yield {
                    "dataset": ds,
                    "method": method,
                    "mean_error_m": cell.mean_error,
                    "coverage_pct": cell.coverage,
                    "hyper": cell.hyper,
                }

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(REPORT_COLUMNS)
            for row in self.rows():
                writer.writerow([_fmt(row[c]) for c in REPORT_COLUMNS])
        return path

    def write_summary_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(("method", "average_error_m", "average_coverage_pct", "rank"))
            for method in self.methods:
                writer.writerow(
                    [
                        method,
                        _fmt(self.averages.get(method)),
                        _fmt(self.coverage_averages.get(method)),
                        _fmt(self.ranks.get(method)),
                    ]
                )
        return path

    def to_json(self) -> dict:
        return {
            "rows": list(self.rows()),
            "averages": {m: self.averages[m] for m in self.methods if m in self.averages},
            "coverage_averages": {
                m: self.coverage_averages[m] for m in self.methods if m in self.coverage_averages
            },
            "ranks": {m: self.ranks[m] for m in self.methods if m in self.ranks},
        }

    def write_json(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_json(), indent=2, allow_nan=False) + "\n")
        return path

    def table(self, precision: int = 2) -> str:
        """Datasets as rows, methods as columns; coverage in a second block."""
        name_w = max([len("Dataset"), len("Average")] + [len(d) for d in self.datasets])
        col_w = max(7, max(len(m) for m in self.methods) + 1)

        def line(label: str, values: Iterable[str]) -> str:
            return label.ljust(name_w) + "".join(v.rjust(col_w) for v in values)

        def num(v: float | None) -> str:
            return "-" if v is None else f"{v:.{precision}f}"

        out = ["Mean 3D positioning error [m]", line("Dataset", self.methods)]
        for ds in self.datasets:
            cells = self.per_dataset.get(ds, {})
            out.append(line(ds, (num(cells[m].mean_error) if m in cells else "x" for m in self.methods)))
        out.append(line("Average", (num(self.averages.get(m)) for m in self.methods)))
        out.append(line("Rank", (str(self.ranks[m]) if m in self.ranks else "-" for m in self.methods)))
        out += ["", "Coverage ratio [%]", line("Dataset", self.methods)]
        for ds in self.datasets:
            cells = self.per_dataset.get(ds, {})
            out.append(line(ds, (num(cells[m].coverage) if m in cells else "x" for m in self.methods)))
        out.append(line("Average", (num(self.coverage_averages.get(m)) for m in self.methods)))
        return "\n".join(out)


def _fmt(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dense_ranks(averages: dict[str, float], precision: int = 2) -> dict[str, int]:
    """Rank by ascending average; averages equal at ``precision`` decimals tie.

    Tied methods share the lower rank and the next distinct average takes
    the next integer.
    """
    keys = {m: round(v, precision) for m, v in averages.items()}
    distinct = sorted(set(keys.values()))
    position = {v: i + 1 for i, v in enumerate(distinct)}
    return {m: position[k] for m, k in keys.items()}


def summarize(runs: Sequence[MethodRun], precision: int = 2) -> EvaluationReport:
    """Aggregate raw outcomes into per-dataset cells, averages and ranks.

    Mean errors only count test samples that received an estimate; the
    coverage column carries the rest.
    """
    if not runs:
        raise ValueError("nothing to summarize")
    datasets: list[str] = []
    methods: list[str] = []
    per_dataset: dict[str, dict[str, Cell]] = {}
    for run in runs:
        if run.dataset not in datasets:
            datasets.append(run.dataset)
        if run.method not in methods:
            methods.append(run.method)
        per_dataset.setdefault(run.dataset, {})[run.method] = Cell(
            run.mean_error(), coverage_ratio(run.outcomes), run.hyper
        )

    averages: dict[str, float] = {}
    coverage_averages: dict[str, float] = {}
    for method in methods:
        cells = [per_dataset[ds][method] for ds in datasets if method in per_dataset[ds]]
        errs = [c.mean_error for c in cells if c.mean_error is not None]
        if errs:
            averages[method] = math.fsum(errs) / len(errs)
            coverage_averages[method] = math.fsum(c.coverage for c in cells) / len(cells)
    return EvaluationReport(
        datasets, methods, per_dataset, averages, dense_ranks(averages, precision), coverage_averages
    )


def write_trace_csv(path: str | Path, rows: Iterable[tuple[float, float | None, float, bool]]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(("hyper", "mean_error", "coverage", "feasible"))
        for hyper, err, cov, ok in rows:
            writer.writerow([_fmt(hyper), _fmt(err), _fmt(cov), "1" if ok else "0"])
    return path


def write_sweep_csv(path: str | Path, rows: Iterable) -> Path:
    """Threshold sweep table; infeasible thresholds stay in with ``feasible=0``."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(("tau_m", "mean_error_m", "coverage_pct", "p", "feasible"))
        for row in rows:
            writer.writerow(
                [_fmt(row.tau), _fmt(row.mean_error), _fmt(row.coverage), _fmt(row.p), "1" if row.feasible else "0"]
            )
    return path


def write_outcomes_csv(path: str | Path, run: MethodRun) -> Path:
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ("test_index", "status", "est_x", "est_y", "est_z", "true_x", "true_y", "true_z", "error_m", "neighbors_used")
        )
        for j, (o, t, e) in enumerate(zip(run.outcomes, run.truths, run.errors())):
            est = [_fmt(float(v)) for v in o.position] if o.estimated else ["", "", ""]
            writer.writerow(
                [j, "estimated" if o.estimated else "no_coverage", *est, *(_fmt(float(v)) for v in t), _fmt(e), o.neighbors_used]
            )
    return path
