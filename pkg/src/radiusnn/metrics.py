"""Distance metrics over RSS fingerprints.

Every metric is implemented once, as a row-wise kernel (:func:`distances_to`).
The scalar :func:`distance` is the one-row case of the same kernel, so a
pairwise loop and a vectorized scan produce bit-identical values.
"""

from __future__ import annotations

from enum import Enum

import numpy as np


class Metric(str, Enum):
    EUCLIDEAN = "euclidean"
    CITYBLOCK = "cityblock"
    COSINE = "cosine"
    MINMAX = "minmax"
    CLARK = "clark"

    @classmethod
    def parse(cls, value: "str | Metric") -> "Metric":
        if isinstance(value, Metric):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ValueError(f"Unknown metric {value!r}; expected one of: {names}") from None

    @property
    def needs_positive(self) -> bool:
        """Whether fingerprints are shifted to a non-negative domain before use."""
        return self in (Metric.COSINE, Metric.MINMAX, Metric.CLARK)


def positive_transform(rss: np.ndarray, floor: float) -> np.ndarray:
    """Map dBm values to ``rss - floor``, clamped at zero."""
    out = np.asarray(rss, dtype=float) - float(floor)
    return np.maximum(out, 0.0)


def features(metric: Metric, rss: np.ndarray, floor: float) -> np.ndarray:
    """The representation a metric actually compares (raw dBm or shifted)."""
    metric = Metric.parse(metric)
    rss = np.asarray(rss, dtype=float)
    if metric.needs_positive:
        return positive_transform(rss, floor)
    return rss


def _unit_rows(y: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.sum(y * y, axis=-1))
    if np.any(norms == 0.0):
        raise ValueError("cosine distance undefined for a zero-norm vector")
    return y / norms[..., None]


def _cosine_lenient(rows: np.ndarray, x: np.ndarray) -> np.ndarray:
    # a scan with nothing detected has no direction: similarity 0 to any
    # other scan, identical to another empty scan
    rn = np.sqrt(np.sum(rows * rows, axis=1))
    xn = float(np.sqrt(np.sum(x * x)))
    out = np.where(rn == 0.0, 0.0 if xn == 0.0 else 1.0, 1.0)
    ok = rn > 0.0
    if xn > 0.0 and ok.any():
        diff = rows[ok] / rn[ok, None] - x / xn
        out[ok] = 0.5 * np.sum(diff * diff, axis=1)
    return out


def distances_to(metric: Metric, rows: np.ndarray, x: np.ndarray, *, strict: bool = True) -> np.ndarray:
    """Distances from ``x`` to every row of ``rows`` (shape ``(N, n)``).

    With ``strict=False`` a zero-norm vector under Cosine is treated as
    orthogonal to everything (distance 1) except another zero vector
    (distance 0) instead of raising.
    """
    metric = Metric.parse(metric)
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or rows.shape[1] != x.shape[0]:
        raise ValueError(
            f"length mismatch: query has {x.shape[-1]} entries, rows have {rows.shape[1]}"
        )

    if metric is Metric.EUCLIDEAN:
        diff = rows - x
        return np.sqrt(np.sum(diff * diff, axis=1))
    if metric is Metric.CITYBLOCK:
        return np.sum(np.abs(rows - x), axis=1)
    if metric is Metric.COSINE:
        if not strict:
            return _cosine_lenient(rows, x)
        # 0.5 * ||u - v||^2 == 1 - cos(u, v) for unit u, v; exact zero on identical inputs
        diff = _unit_rows(rows) - _unit_rows(x)
        return 0.5 * np.sum(diff * diff, axis=1)
    if metric is Metric.MINMAX:
        lo = np.sum(np.minimum(rows, x), axis=1)
        hi = np.sum(np.maximum(rows, x), axis=1)
        out = np.zeros(rows.shape[0])
        nz = hi != 0.0
        out[nz] = 1.0 - lo[nz] / hi[nz]
        return out
    if metric is Metric.CLARK:
        num = rows - x
        den = rows + x
        ratio = np.divide(num, den, out=np.zeros_like(num), where=den != 0.0)
        return np.sqrt(np.sum(ratio * ratio, axis=1))
    raise ValueError(f"Unsupported metric: {metric}")  # pragma: no cover


def distance(metric: Metric, a: np.ndarray, b: np.ndarray) -> float:
    """Distance between two equal-length vectors under ``metric``.

    MinMax and Clark assume non-negative inputs; callers working on dBm
    values should pass them through :func:`positive_transform` first.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(distances_to(metric, b[None, :], a)[0])


def distance_matrix(
    metric: Metric, queries: np.ndarray, rows: np.ndarray, *, strict: bool = True
) -> np.ndarray:
    """Dense ``(m, N)`` matrix of query-to-row distances, one kernel call per query."""
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    out = np.empty((queries.shape[0], np.atleast_2d(rows).shape[0]))
    for i, q in enumerate(queries):
        out[i] = distances_to(metric, rows, q, strict=strict)
    return out
