"""Command-line harness: ``radiusnn evaluate | sweep-tau | generate | validate-config``.

Exit codes: 0 success, 1 config error, 2 data error, 3 infeasibility.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from .config import ConfigError, RunConfig, SyntheticParams, load_config, parse_methods
from .dataset import save_csv
from .runner import run_evaluate, run_sweep

EXIT_CONFIG, EXIT_DATA, EXIT_INFEASIBLE = 1, 2, 3


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(path: str, **overrides) -> RunConfig:
    try:
        return load_config(path).with_overrides(**overrides)
    except ConfigError as exc:
        _fail(str(exc), EXIT_CONFIG)


def _parse_taus(text: str) -> list[float]:
    try:
        taus = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise click.BadParameter(f"not a comma-separated number list: {text!r}") from None
    if not taus or any(t <= 0 for t in taus):
        raise click.BadParameter("thresholds must be positive")
    return taus


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool) -> None:
    """Radius-based near neighbor positioning benchmark."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), help="Output directory.")
@click.option("--seed", type=int)
@click.option("--workers", help="Worker processes, or 'auto'.")
@click.option("--methods", help="Comma-separated method ids, e.g. M1,M17,M23.")
@click.option("--dump-outcomes", is_flag=True, default=None, help="Write per-sample outcomes.")
def evaluate(config_path, out, seed, workers, methods, dump_outcomes) -> None:
    """Tune and evaluate every configured method on every dataset."""
    cfg = _load(config_path, out=out, seed=seed, workers=workers, methods=methods,
                dump_outcomes=dump_outcomes)
    result = run_evaluate(cfg)
    if result.report is not None:
        click.echo(result.report.table())
    for name, msg in result.dataset_errors.items():
        click.echo(f"error: dataset {name}: {msg}", err=True)
    for cell in result.cells:
        if cell.status != "ok":
            click.echo(f"error: {cell.dataset}/{cell.method}: {cell.message}", err=True)
    click.echo(f"wrote {len(result.files)} files to {cfg.out}", err=True)
    sys.exit(result.exit_code)


@main.command("sweep-tau")
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--method", "method_id", default="M23", show_default=True)
@click.option("--taus", help="Comma-separated thresholds in meters (default: config grid).")
@click.option("--out", type=click.Path(file_okay=False))
@click.option("--seed", type=int)
@click.option("--workers")
def sweep_tau_cmd(config_path, method_id, taus, out, seed, workers) -> None:
    """Retune p across error thresholds for one ARNN/WARNN method."""
    cfg = _load(config_path, out=out, seed=seed, workers=workers)
    try:
        method_id = parse_methods(method_id)[0]
    except ConfigError as exc:
        _fail(str(exc), EXIT_CONFIG)
    tau_grid = _parse_taus(taus) if taus else cfg.grid.tau_grid
    try:
        files, errors = run_sweep(cfg, method_id, tau_grid)
    except ValueError as exc:
        _fail(str(exc), EXIT_CONFIG)
    for name, path in files.items():
        click.echo(f"{name}: {path}")
    for name, msg in errors.items():
        click.echo(f"error: dataset {name}: {msg}", err=True)
    sys.exit(EXIT_DATA if errors else 0)


@main.command()
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False), help="CSV file to write.")
@click.option("--grid", nargs=3, type=int, default=(10, 10, 1), show_default=True)
@click.option("--spacing", type=float, default=2.0, show_default=True)
@click.option("--tx-power", type=float, default=-40.0, show_default=True)
@click.option("--exponent", type=float, default=3.0, show_default=True)
@click.option("--noise-sd", type=float, default=4.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def generate(out_path, grid, spacing, tx_power, exponent, noise_sd, seed) -> None:
    """Write a synthetic radio map (four corner APs) as a loadable CSV."""
    params = SyntheticParams(tuple(grid), spacing, None, tx_power, exponent, noise_sd)
    try:
        dataset = params.build(seed, Path(out_path).stem)
    except ValueError as exc:
        _fail(str(exc), EXIT_CONFIG)
    save_csv(dataset, out_path)
    click.echo(f"wrote {len(dataset)} fingerprints x {dataset.ap_count} APs to {out_path}")


@main.command("validate-config")
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
def validate_config(config_path) -> None:
    """Parse a config and check its dataset files exist."""
    cfg = _load(config_path)
    missing = [str(p) for ds in cfg.datasets for p in ds.files() if not p.is_file()]
    if missing:
        _fail("unreadable dataset path(s): " + ", ".join(missing), EXIT_DATA)
    click.echo(
        f"ok: {len(cfg.datasets)} dataset(s), methods {','.join(cfg.methods)}, "
        f"tau={cfg.tau:g} m, min coverage {cfg.min_coverage:g}%"
    )
