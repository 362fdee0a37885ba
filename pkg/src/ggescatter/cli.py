"""Command line entry point: ``ggescatter run CONFIG [--out DIR]`` and ``ggescatter validate CONFIG``."""

from __future__ import annotations

import logging
import sys

import click
import numpy as np

from .oracle import OracleError
from .runner import ConfigError, load_config, run
from .steady import ConvergenceError, RootSolveError

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

NUMERICAL_ERRORS = (ConvergenceError, RootSolveError, OracleError, ArithmeticError,
                    np.linalg.LinAlgError)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool):
    """Simulate weakly dissipative Ising chains with GGE scattering theory."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


def _load(path: str):
    try:
        return load_config(path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


@main.command("validate")
@click.argument("config", type=click.Path(dir_okay=False))
def validate_cmd(config: str):
    """Check CONFIG without running anything."""
    cfg = _load(config)
    click.echo(f"ok: {cfg.experiment} (L={cfg.L}, variant={cfg.variant})")


@main.command("run")
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Output directory (overrides output.directory).")
def run_cmd(config: str, out_dir):
    """Run the experiment described by CONFIG."""
    cfg = _load(config)
    try:
        files = run(cfg, out_dir)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except NUMERICAL_ERRORS as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    for path in files:
        click.echo(str(path))


if __name__ == "__main__":
    main()
