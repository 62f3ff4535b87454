"""Run configuration: one TOML file describing datasets, methods and grids."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .dataset import (
    DEFAULT_FILL,
    DEFAULT_FLOOR_HEIGHT,
    DEFAULT_MISSING_MARKER,
    CsvSchema,
    DataError,
    FingerprintDataset,
    generate_synthetic,
    grid_access_points,
    load_csv,
    split,
)
from .estimators import METHOD_IDS, UNWEIGHTED, Weighting, idw, lookup
from .metrics import Metric
from .tuning import SearchGrid

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class SyntheticParams:
    grid: tuple[int, int, int] = (10, 10, 2)
    spacing: float = 2.0
    ap_positions: list[tuple[float, float, float]] | None = None
    tx_power: float = -40.0
    exponent: float = 3.0
    noise_sd: float = 4.0

    def build(self, seed: int, name: str, fill: float = DEFAULT_FILL) -> FingerprintDataset:
        aps = self.ap_positions or grid_access_points(self.grid, self.spacing)
        return generate_synthetic(
            self.grid, self.spacing, aps, (self.tx_power, self.exponent), self.noise_sd, seed, name, fill
        )


@dataclass
class DatasetConfig:
    """Where one dataset comes from.

    Exactly one source: pre-split ``train``/``test`` files, a single
    ``path`` split with ``split_fraction``, or ``synthetic`` parameters
    (also split with ``split_fraction``).
    """

    name: str
    train: Path | None = None
    test: Path | None = None
    path: Path | None = None
    synthetic: SyntheticParams | None = None
    schema: CsvSchema = field(default_factory=lambda: CsvSchema(rss_prefix="AP", z="z"))
    missing_marker: float = DEFAULT_MISSING_MARKER
    fill: float = DEFAULT_FILL
    floor_height: float = DEFAULT_FLOOR_HEIGHT
    split_fraction: float = 0.7

    def files(self) -> list[Path]:
        return [p for p in (self.train, self.test, self.path) if p is not None]

    def load(self, seed: int) -> tuple[FingerprintDataset, FingerprintDataset]:
        kw = dict(
            schema=self.schema,
            missing_marker=self.missing_marker,
            fill=self.fill,
            floor_height=self.floor_height,
            name=self.name,
        )
        if self.train is not None:
            train = load_csv(self.train, **kw)
            test = load_csv(self.test, **kw)
            if train.ap_count != test.ap_count:
                raise DataError(
                    f"{self.name}: train has {train.ap_count} APs, test has {test.ap_count}"
                )
            return train, test
        if self.path is not None:
            full = load_csv(self.path, **kw)
        else:
            full = self.synthetic.build(seed, self.name, self.fill)
        try:
            return split(full, self.split_fraction, seed)
        except ValueError as exc:
            raise DataError(f"{self.name}: {exc}") from None


@dataclass
class RunConfig:
    datasets: list[DatasetConfig]
    methods: list[str]
    grid: SearchGrid = field(default_factory=SearchGrid)
    tau: float = 5.0
    k_min: int = 1
    seed: int = 0
    out: Path = Path("results")
    workers: int | str = 1
    tune_on: str = "test"
    validation_fraction: float = 0.8
    dump_outcomes: bool = False
    train_weighting: Weighting = UNWEIGHTED

    @property
    def min_coverage(self) -> float:
        return self.grid.min_coverage

    def worker_count(self) -> int:
        if self.workers == "auto":
            return os.cpu_count() or 1
        return int(self.workers)

    def with_overrides(self, **flags: Any) -> "RunConfig":
        """Apply command-line overrides; ``None`` means not given."""
        changes = {k: v for k, v in flags.items() if v is not None}
        if "methods" in changes:
            changes["methods"] = parse_methods(changes["methods"])
        if "workers" in changes:
            changes["workers"] = parse_workers(changes["workers"])
        if "out" in changes:
            changes["out"] = Path(changes["out"])
        return replace(self, **changes)


def parse_methods(value: str | list[str]) -> list[str]:
    items = value.split(",") if isinstance(value, str) else list(value)
    methods = [str(m).strip().upper() for m in items if str(m).strip()]
    if not methods:
        raise ConfigError("methods list is empty")
    for m in methods:
        if m not in METHOD_IDS:
            raise ConfigError(f"unknown method id {m!r}; known: {', '.join(METHOD_IDS)}")
    if len(set(methods)) != len(methods):
        raise ConfigError("duplicate method ids")
    return methods


def parse_workers(value: Any) -> int | str:
    if str(value).strip().lower() == "auto":
        return "auto"
    try:
        n = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"workers must be a positive integer or 'auto', got {value!r}") from None
    if n < 1:
        raise ConfigError(f"workers must be >= 1, got {n}")
    return n


def parse_train_weighting(value: Any) -> Weighting:
    """``"unweighted"`` or ``"idw:<alpha>"`` for the radius-training estimate."""
    text = str(value).strip().lower()
    if text == "unweighted":
        return UNWEIGHTED
    if text.startswith("idw:"):
        try:
            return idw(float(text[4:]))
        except ValueError:
            pass
    raise ConfigError(f"train_weighting must be 'unweighted' or 'idw:<alpha>', got {value!r}")


def _float_list(value: Any, what: str) -> list[float]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{what} must be a non-empty list")
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must contain numbers") from None


def _parse_grid(table: dict, min_coverage: float) -> SearchGrid:
    grid = SearchGrid(min_coverage=min_coverage)
    unknown = set(table) - {"k", "r_max", "p", "tau"}
    if unknown:
        raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
    if "k" in table:
        ks = _float_list(table["k"], "grid.k")
        if any(k != int(k) or k < 1 for k in ks):
            raise ConfigError("grid.k must hold positive integers")
        grid.k_grid = [int(k) for k in ks]
    if "p" in table:
        grid.p_grid = _float_list(table["p"], "grid.p")
        if any(p <= 0 for p in grid.p_grid):
            raise ConfigError("grid.p must be positive")
    if "tau" in table:
        grid.tau_grid = _float_list(table["tau"], "grid.tau")
    if "r_max" in table:
        if not isinstance(table["r_max"], dict):
            raise ConfigError("grid.r_max must be a table keyed by metric name")
        for name, values in table["r_max"].items():
            try:
                metric = Metric.parse(name)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            grid.r_max_grid[metric] = _float_list(values, f"grid.r_max.{name}")
    return grid


def _parse_dataset(entry: dict, base: Path) -> DatasetConfig:
    if "name" not in entry:
        raise ConfigError("every dataset needs a name")
    name = str(entry["name"])
    known = {
        "name", "train", "test", "path", "synthetic", "schema",
        "missing_marker", "fill", "floor_height", "split_fraction",
    }
    unknown = set(entry) - known
    if unknown:
        raise ConfigError(f"dataset {name}: unknown keys {sorted(unknown)}")
    sources = [("train" in entry or "test" in entry), "path" in entry, "synthetic" in entry]
    if sum(sources) != 1:
        raise ConfigError(f"dataset {name}: give exactly one of train/test, path, or synthetic")
    if sources[0] and not ("train" in entry and "test" in entry):
        raise ConfigError(f"dataset {name}: train and test must be given together")

    def resolve(key: str) -> Path | None:
        if key not in entry:
            return None
        p = Path(entry[key])
        return p if p.is_absolute() else base / p

    try:
        schema = CsvSchema(**entry["schema"]) if "schema" in entry else CsvSchema(rss_prefix="AP", z="z")
    except (TypeError, DataError) as exc:
        raise ConfigError(f"dataset {name}: bad schema: {exc}") from None
    synthetic = None
    if "synthetic" in entry:
        params = dict(entry["synthetic"])
        if "grid" in params:
            params["grid"] = tuple(int(g) for g in params["grid"])
        if "ap_positions" in params:
            params["ap_positions"] = [tuple(float(c) for c in ap) for ap in params["ap_positions"]]
        try:
            synthetic = SyntheticParams(**params)
        except TypeError as exc:
            raise ConfigError(f"dataset {name}: bad synthetic parameters: {exc}") from None
    fraction = float(entry.get("split_fraction", 0.7))
    if not 0 < fraction < 1:
        raise ConfigError(f"dataset {name}: split_fraction must lie in (0, 1)")
    return DatasetConfig(
        name=name,
        train=resolve("train"),
        test=resolve("test"),
        path=resolve("path"),
        synthetic=synthetic,
        schema=schema,
        missing_marker=float(entry.get("missing_marker", DEFAULT_MISSING_MARKER)),
        fill=float(entry.get("fill", DEFAULT_FILL)),
        floor_height=float(entry.get("floor_height", DEFAULT_FLOOR_HEIGHT)),
        split_fraction=fraction,
    )


def parse_config(data: dict, base: Path = Path(".")) -> RunConfig:
    known = {
        "datasets", "methods", "grid", "tau", "k_min", "min_coverage", "seed",
        "out", "workers", "tune_on", "validation_fraction", "dump_outcomes", "train_weighting",
    }
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    datasets = [_parse_dataset(d, base) for d in data.get("datasets", [])]
    if not datasets:
        raise ConfigError("no datasets configured")
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise ConfigError("dataset names must be unique")
    if "methods" not in data:
        raise ConfigError("methods list is missing")
    methods = parse_methods(data["methods"])

    min_cov = float(data.get("min_coverage", 90.0))
    if not 0 <= min_cov <= 100:
        raise ConfigError("min_coverage must lie in [0, 100]")
    grid = _parse_grid(data.get("grid", {}), min_cov)
    for m in methods:
        spec = lookup(m)
        try:
            grid.values_for(spec)
        except ValueError as exc:
            raise ConfigError(f"{m}: {exc}") from None

    tau = float(data.get("tau", 5.0))
    if tau <= 0:
        raise ConfigError("tau must be positive")
    tune_on = str(data.get("tune_on", "test"))
    if tune_on not in ("test", "validation"):
        raise ConfigError("tune_on must be 'test' or 'validation'")
    out = Path(data.get("out", "results"))
    return RunConfig(
        datasets=datasets,
        methods=methods,
        grid=grid,
        tau=tau,
        k_min=int(data.get("k_min", 1)),
        seed=int(data.get("seed", 0)),
        out=out if out.is_absolute() else base / out,
        workers=parse_workers(data.get("workers", 1)),
        tune_on=tune_on,
        validation_fraction=float(data.get("validation_fraction", 0.8)),
        dump_outcomes=bool(data.get("dump_outcomes", False)),
        train_weighting=parse_train_weighting(data.get("train_weighting", "unweighted")),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, path.resolve().parent)
