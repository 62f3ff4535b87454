import numpy as np
import pytest

from radiusnn.dataset import FingerprintDataset, generate_synthetic, grid_access_points, split


def random_dataset(rng, n, aps, name="rand", fill=-105.0, dup_rate=0.0):
    rss = rng.uniform(-100.0, -30.0, size=(n, aps)).round(rng.integers(0, 3))
    # a share of undetected APs, as in real scans
    rss[rng.random((n, aps)) < 0.2] = fill
    if dup_rate and n > 1:
        for i in range(1, n):
            if rng.random() < dup_rate:
                rss[i] = rss[rng.integers(0, i)]
    pos = rng.uniform(0.0, 50.0, size=(n, 3)).round(1)
    return FingerprintDataset(rss, pos, name=name, not_detected_fill=fill)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def noisy_benchmark():
    """10x10x2 grid, 4 APs, noise 4 dBm, 70/30 split."""
    g = (10, 10, 2)
    ds = generate_synthetic(g, 2.0, grid_access_points(g, 2.0), (-40.0, 3.0), 4.0, seed=42)
    return split(ds, 0.7, seed=42)


@pytest.fixture(scope="session")
def small_benchmark():
    g = (8, 8, 1)
    ds = generate_synthetic(g, 2.0, grid_access_points(g, 2.0), (-40.0, 3.0), 3.0, seed=7)
    return split(ds, 0.75, seed=7)


_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion, then assert it."""

    def record(label: str, ok: bool | None, detail: str = "") -> bool:
        status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        line = f"{status}  {label}" + (f"  ({detail})" if detail else "")
        _CRITERIA.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
