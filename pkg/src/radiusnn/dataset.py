"""Fingerprint datasets: CSV ingestion, synthetic radio maps, and splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

DEFAULT_FILL = -105.0
DEFAULT_MISSING_MARKER = 100.0
DEFAULT_FLOOR_HEIGHT = 4.0


class DataError(ValueError):
    """Raised for unreadable, malformed or inconsistent fingerprint data."""


@dataclass(frozen=True)
class Fingerprint:
    rss: np.ndarray
    position: np.ndarray


@dataclass(frozen=True, eq=False)
class FingerprintDataset:
    """Immutable, ordered collection of fingerprints sharing one AP count.

    ``rss`` is ``(N, n)`` in dBm with missing APs already replaced by
    ``not_detected_fill``; ``positions`` is ``(N, 3)`` in meters. Row order
    is the file order and drives every downstream tie-break.
    """

    rss: np.ndarray
    positions: np.ndarray
    name: str = "dataset"
    not_detected_fill: float = DEFAULT_FILL

    def __post_init__(self) -> None:
        rss = np.array(self.rss, dtype=float, copy=True)
        pos = np.array(self.positions, dtype=float, copy=True)
        if rss.ndim != 2 or rss.shape[0] == 0 or rss.shape[1] == 0:
            raise DataError(f"{self.name}: rss must be a non-empty 2-D array, got shape {rss.shape}")
        if pos.shape != (rss.shape[0], 3):
            raise DataError(
                f"{self.name}: positions must have shape ({rss.shape[0]}, 3), got {pos.shape}"
            )
        if not np.all(np.isfinite(rss)):
            raise DataError(f"{self.name}: non-finite RSS value")
        if not np.all(np.isfinite(pos)):
            raise DataError(f"{self.name}: non-finite position component")
        rss.setflags(write=False)
        pos.setflags(write=False)
        object.__setattr__(self, "rss", rss)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "not_detected_fill", float(self.not_detected_fill))

    def __len__(self) -> int:
        return self.rss.shape[0]

    def __getitem__(self, i: int) -> Fingerprint:
        return Fingerprint(self.rss[i], self.positions[i])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FingerprintDataset):
            return NotImplemented
        return (
            self.name == other.name
            and self.not_detected_fill == other.not_detected_fill
            and np.array_equal(self.rss, other.rss)
            and np.array_equal(self.positions, other.positions)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def ap_count(self) -> int:
        return self.rss.shape[1]

    @property
    def samples(self) -> list[Fingerprint]:
        return [self[i] for i in range(len(self))]

    def subset(self, indices: Sequence[int], name: str | None = None) -> "FingerprintDataset":
        idx = np.asarray(indices, dtype=int)
        return FingerprintDataset(
            self.rss[idx],
            self.positions[idx],
            name=self.name if name is None else name,
            not_detected_fill=self.not_detected_fill,
        )


@dataclass
class CsvSchema:
    """Column binding for a fingerprint CSV.

    RSS columns are either listed explicitly or picked by name prefix, in
    header order. Exactly one of ``z`` and ``floor`` names the vertical
    coordinate; ``floor`` is an integer index scaled by the floor height.
    """

    rss_prefix: str | None = "WAP"
    rss_columns: list[str] | None = None
    x: str = "x"
    y: str = "y"
    z: str | None = None
    floor: str | None = None

    def __post_init__(self) -> None:
        if self.rss_columns is None and not self.rss_prefix:
            raise DataError("schema needs rss_columns or rss_prefix")
        if (self.z is None) == (self.floor is None):
            raise DataError("schema needs exactly one of z or floor")

    def resolve_rss(self, header: Sequence[str]) -> list[str]:
        if self.rss_columns is not None:
            missing = [c for c in self.rss_columns if c not in header]
            if missing:
                raise DataError(f"RSS columns not in header: {missing}")
            return list(self.rss_columns)
        cols = [c for c in header if c.startswith(self.rss_prefix or "")]
        if not cols:
            raise DataError(f"no RSS columns with prefix {self.rss_prefix!r}")
        return cols


SERIALIZED_SCHEMA = CsvSchema(rss_prefix="AP", x="x", y="y", z="z")


def _parse_float(text: str, what: str, row_no: int, path: Path) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"{path}: row {row_no}: non-numeric {what} {text!r}") from None
    if not math.isfinite(value):
        raise DataError(f"{path}: row {row_no}: non-finite {what} {text!r}")
    return value


def load_csv(
    path: str | Path,
    schema: CsvSchema | None = None,
    missing_marker: float = DEFAULT_MISSING_MARKER,
    fill: float = DEFAULT_FILL,
    floor_height: float = DEFAULT_FLOOR_HEIGHT,
    name: str | None = None,
) -> FingerprintDataset:
    """Read a fingerprint CSV with a header row.

    Entries equal to ``missing_marker`` are replaced by ``fill``. A floor
    column, if bound, becomes ``z = floor_index * floor_height``.
    """
    path = Path(path)
    schema = schema or SERIALIZED_SCHEMA
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise DataError(f"cannot read dataset file {path}: {exc.strerror or exc}") from None

    with handle:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rss_cols = schema.resolve_rss(header)
        vertical = schema.z if schema.z is not None else schema.floor
        for col in (schema.x, schema.y, vertical):
            if col not in header:
                raise DataError(f"{path}: coordinate column {col!r} not in header")
        col_index = {c: i for i, c in enumerate(header)}
        rss_idx = [col_index[c] for c in rss_cols]
        xi, yi, vi = col_index[schema.x], col_index[schema.y], col_index[vertical]

        rss_rows: list[list[float]] = []
        pos_rows: list[list[float]] = []
        # header is line 1
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row {row_no}: inconsistent column count "
                    f"({len(row)} fields, header has {len(header)})"
                )
            values = [_parse_float(row[j], "RSS", row_no, path) for j in rss_idx]
            rss_rows.append([fill if v == missing_marker else v for v in values])
            z = _parse_float(row[vi], vertical, row_no, path)
            if schema.floor is not None:
                z *= floor_height
            pos_rows.append(
                [
                    _parse_float(row[xi], schema.x, row_no, path),
                    _parse_float(row[yi], schema.y, row_no, path),
                    z,
                ]
            )

    if not rss_rows:
        raise DataError(f"{path}: empty dataset (no data rows)")
    return FingerprintDataset(
        np.array(rss_rows), np.array(pos_rows), name=name or path.stem, not_detected_fill=fill
    )


def save_csv(dataset: FingerprintDataset, path: str | Path) -> Path:
    """Write ``dataset`` in the serialized schema (``AP001..``, ``x, y, z``)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(dataset.ap_count)))
    header = [f"AP{j + 1:0{width}d}" for j in range(dataset.ap_count)] + ["x", "y", "z"]
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for rss, pos in zip(dataset.rss, dataset.positions):
            writer.writerow([repr(float(v)) for v in rss] + [repr(float(v)) for v in pos])
    return path


def grid_access_points(grid: tuple[int, int, int], spacing: float) -> list[tuple[float, float, float]]:
    """Four APs at the horizontal corners of a grid, at mid height."""
    nx, ny, nz = grid
    x1, y1 = (nx - 1) * spacing, (ny - 1) * spacing
    zm = (nz - 1) * spacing / 2.0
    return [(0.0, 0.0, zm), (x1, 0.0, zm), (0.0, y1, zm), (x1, y1, zm)]


def generate_synthetic(
    grid: tuple[int, int, int],
    spacing: float,
    ap_positions: Sequence[Sequence[float]],
    path_loss: tuple[float, float] = (-40.0, 3.0),
    noise_sd: float = 0.0,
    seed: int = 0,
    name: str = "synthetic",
    fill: float = DEFAULT_FILL,
) -> FingerprintDataset:
    """One fingerprint per grid point under a log-distance path-loss model.

    RSS = tx_power - 10 * exponent * log10(max(dist, 1 m)) + N(0, noise_sd).
    Grid points are ordered with x varying slowest and z fastest.
    """
    nx, ny, nz = (int(g) for g in grid)
    if min(nx, ny, nz) < 1:
        raise ValueError(f"grid dimensions must be >= 1, got {grid}")
    if not spacing > 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    aps = np.asarray(ap_positions, dtype=float)
    if aps.ndim != 2 or aps.shape[0] < 1 or aps.shape[1] != 3:
        raise ValueError("need at least one AP given as a 3-vector")
    if noise_sd < 0:
        raise ValueError(f"noise_sd must be >= 0, got {noise_sd}")

    gx, gy, gz = np.meshgrid(
        np.arange(nx) * spacing, np.arange(ny) * spacing, np.arange(nz) * spacing, indexing="ij"
    )
    positions = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    dist = np.linalg.norm(positions[:, None, :] - aps[None, :, :], axis=2)
    tx_power, exponent = path_loss
    rss = tx_power - 10.0 * exponent * np.log10(np.maximum(dist, 1.0))
    rng = np.random.default_rng(seed)
    rss = rss + rng.normal(0.0, noise_sd, size=rss.shape)
    return FingerprintDataset(rss, positions, name=name, not_detected_fill=fill)


def split(
    dataset: FingerprintDataset, fraction: float, seed: int
) -> tuple[FingerprintDataset, FingerprintDataset]:
    """Random train/test partition; each side keeps the original row order."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    n = len(dataset)
    n_train = int(round(fraction * n))
    if n_train == 0 or n_train == n:
        raise ValueError(f"fraction {fraction} leaves an empty side for {n} samples")
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return (
        dataset.subset(train_idx),
        dataset.subset(test_idx),
    )
