"""Main CLI entry point for peclet-lab."""

import logging
from pathlib import Path
from typing import Any, Callable, Optional

import click

from peclet import __version__
from peclet.cli.commands import hypo_verify as hypo_verify_cmd
from peclet.cli.commands import kuksin as kuksin_cmd
from peclet.cli.commands import mixing as mixing_cmd
from peclet.cli.commands import oracle_check as oracle_check_cmd
from peclet.cli.commands import pseudospec as pseudospec_cmd
from peclet.cli.commands import specgap as specgap_cmd
from peclet.cli.commands import sweep_decay as sweep_decay_cmd

LOG_LEVELS = {0: logging.WARNING, 1: logging.INFO}


def experiment_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Options shared by every experiment: the config file and scalar overrides."""
    options = [
        click.option(
            "--config",
            "-c",
            "config_path",
            required=True,
            type=click.Path(dir_okay=False, path_type=Path),
            help="Path to the JSON (or TOML) run configuration",
        ),
        click.option("--workers", type=int, help="Number of worker processes"),
        click.option("--seed", type=int, help="Seed for random test states"),
        click.option("--out", help="Output directory for CSV and JSON artifacts"),
        click.option("--nu", type=float, help="Run a single viscosity instead of the config list"),
        click.option("--k", "k", type=float, help="Run a single x-frequency instead of the config list"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group()
@click.version_option(__version__, prog_name="peclet-lab")
@click.option("--verbose", "-v", count=True, help="Log progress (-v) or debug details (-vv)")
@click.pass_context
def cli(ctx: click.Context, verbose: int) -> None:
    """
    Peclet Lab - numerical experiments on enhanced dissipation in shear flows.

    Each command runs one experiment from a configuration file and writes
    results.csv and summary.json into the output directory.
    """
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    logging.basicConfig(
        level=LOG_LEVELS.get(verbose, logging.DEBUG),
        format="%(levelname)s %(name)s: %(message)s",
    )


@cli.command("sweep-decay")
@experiment_options
def sweep_decay(config_path: Path, **overrides: Optional[Any]) -> None:
    """Measure semigroup decay rates over ν and k and fit their exponents.

    Examples:
      peclet-lab sweep-decay -c configs/sin_sweep.json
      peclet-lab sweep-decay -c configs/sin_sweep.json --workers 4 --out runs/sin
    """
    sweep_decay_cmd.sweep_decay_command(config_path, **overrides)


@cli.command()
@experiment_options
def pseudospec(config_path: Path, **overrides: Optional[Any]) -> None:
    """Compute the pseudospectral gap and check the semigroup bounds it implies."""
    pseudospec_cmd.pseudospec_command(config_path, **overrides)


@cli.command("hypo-verify")
@experiment_options
def hypo_verify(config_path: Path, **overrides: Optional[Any]) -> None:
    """Certify decay of the weighted energy functional and write certificate.json."""
    hypo_verify_cmd.hypo_verify_command(config_path, **overrides)


@cli.command()
@experiment_options
def specgap(config_path: Path, **overrides: Optional[Any]) -> None:
    """Model and localized spectral gaps."""
    specgap_cmd.specgap_command(config_path, **overrides)


@cli.command()
@experiment_options
def mixing(config_path: Path, **overrides: Optional[Any]) -> None:
    """Decay of the H⁻¹ norm under inviscid shear."""
    mixing_cmd.mixing_command(config_path, **overrides)


@cli.command()
@experiment_options
def kuksin(config_path: Path, **overrides: Optional[Any]) -> None:
    """Covariance of the invariant measures as ν → 0."""
    kuksin_cmd.kuksin_command(config_path, **overrides)


@cli.command("oracle-check")
@experiment_options
def oracle_check(config_path: Path, **overrides: Optional[Any]) -> None:
    """Compare sparse computations with dense references on a small grid."""
    oracle_check_cmd.oracle_check_command(config_path, **overrides)


if __name__ == "__main__":
    cli()
