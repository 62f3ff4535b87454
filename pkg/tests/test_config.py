from pathlib import Path

import pytest

from radiusnn.config import ConfigError, load_config, parse_config, parse_methods, parse_workers
from radiusnn.estimators import UNWEIGHTED, idw
from radiusnn.metrics import Metric
from radiusnn.runner import method_spec


def minimal(**extra):
    data = {"methods": ["M1"], "datasets": [{"name": "S", "synthetic": {"grid": [4, 4, 1]}}]}
    data.update(extra)
    return data


class TestParse:
    def test_defaults(self):
        cfg = parse_config(minimal(), Path("/base"))
        assert cfg.tau == 5.0 and cfg.min_coverage == 90.0 and cfg.k_min == 1
        assert cfg.tune_on == "test" and cfg.workers == 1
        assert cfg.out == Path("/base/results")
        assert cfg.train_weighting == UNWEIGHTED

    def test_paths_resolve_against_config_dir(self):
        data = minimal(datasets=[{"name": "D", "train": "a.csv", "test": "/abs/b.csv"}])
        ds = parse_config(data, Path("/cfg")).datasets[0]
        assert ds.train == Path("/cfg/a.csv") and ds.test == Path("/abs/b.csv")

    @pytest.mark.parametrize("bad,match", [
        (dict(methods=[]), "methods list is empty"),
        (dict(methods=["M1", "M1"]), "duplicate"),
        (dict(methods=["M4"]), "unknown method"),
        (dict(tau=0), "tau must be positive"),
        (dict(min_coverage=120), "min_coverage"),
        (dict(tune_on="train"), "tune_on"),
        (dict(workers=0), "workers"),
        (dict(grid={"k": [0]}), "positive integers"),
        (dict(grid={"r_max": {"chebyshev": [1.0]}}), "Unknown metric"),
        (dict(grid={"bogus": [1]}), "unknown grid keys"),
        (dict(train_weighting="adaptive"), "train_weighting"),
        (dict(train_weighting="idw:0"), "train_weighting"),
        (dict(datasets=[]), "no datasets"),
        (dict(datasets=[{"name": "A", "train": "x.csv"}]), "together"),
        (dict(datasets=[{"name": "A", "path": "x.csv", "synthetic": {}}]), "exactly one"),
        (dict(datasets=[{"name": "A", "path": "x.csv", "split_fraction": 1.0}]), "split_fraction"),
        (dict(datasets=[{"name": "A", "path": "x.csv", "schema": {"z": "z", "floor": "f"}}]), "schema"),
    ])
    def test_rejections(self, bad, match):
        with pytest.raises(ConfigError, match=match):
            parse_config(minimal(**bad))

    def test_missing_r_max_grid_for_metric(self):
        data = minimal(methods=["M14"], grid={"r_max": {"euclidean": []}})
        with pytest.raises(ConfigError):
            parse_config(data)

    def test_grid_overrides(self):
        cfg = parse_config(minimal(grid={"k": [2, 4], "r_max": {"cosine": [0.1]}, "tau": [5]}))
        assert cfg.grid.k_grid == [2, 4]
        assert cfg.grid.r_max_grid[Metric.COSINE] == [0.1]
        assert len(cfg.grid.r_max_grid[Metric.EUCLIDEAN]) == 101

    def test_train_weighting_reaches_method_spec(self):
        cfg = parse_config(minimal(methods=["M23", "M1"], train_weighting="idw:2", tau=7, k_min=2))
        spec = method_spec("M23", cfg)
        assert spec.train_weighting == idw(2) and spec.tau == 7 and spec.k_min == 2
        assert method_spec("M1", cfg).train_weighting == UNWEIGHTED

    def test_overrides(self):
        cfg = parse_config(minimal()).with_overrides(methods="m17, m23", workers="auto", seed=None)
        assert cfg.methods == ["M17", "M23"] and cfg.workers == "auto" and cfg.seed == 0
        assert cfg.worker_count() >= 1


class TestHelpers:
    def test_parse_methods_string(self):
        assert parse_methods("M1,m3 , M25") == ["M1", "M3", "M25"]

    def test_parse_workers(self):
        assert parse_workers("auto") == "auto" and parse_workers("4") == 4
        with pytest.raises(ConfigError):
            parse_workers("many")

    def test_bad_toml(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text("methods = [")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_synthetic_dataset_loads_deterministically(self):
        ds = parse_config(minimal()).datasets[0]
        a, b = ds.load(3), ds.load(3)
        assert a[0] == b[0] and a[1] == b[1]
        assert len(a[0]) + len(a[1]) == 16
