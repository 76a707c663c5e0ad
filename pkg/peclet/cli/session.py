"""Shared run loop for the experiment commands: config, artifacts, exit codes."""

import logging
from pathlib import Path
from typing import Any, Callable, Optional

import click

from peclet import __version__
from peclet.core.config import RunConfig
from peclet.core.errors import PecletError
from peclet.utils.artifacts import ArtifactWriter, Provenance
from peclet.utils.output import format_error, format_info, format_success

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class RunSession:
    """Collects the rows and summary of one experiment and writes them out."""

    def __init__(self, config: RunConfig, writer: ArtifactWriter) -> None:
        self.config = config
        self.writer = writer
        self.results: list[dict[str, Any]] = []
        self.tables: dict[str, list[dict[str, Any]]] = {}
        self.summary: dict[str, Any] = {}
        self.certificate: Optional[dict[str, Any]] = None

    @property
    def experiment(self) -> str:
        return self.config.experiment or "unknown"

    def add_result(self, row: dict[str, Any]) -> None:
        self.results.append(row)

    def add_rows(self, table: str, rows: list[dict[str, Any]]) -> None:
        self.tables.setdefault(table, []).extend(rows)

    def flush(self, status: str, error: Optional[str] = None) -> list[Path]:
        """Write everything gathered so far; called on success and on failure."""
        paths = [self.writer.write_csv("results.csv", self.results)]
        for name, rows in sorted(self.tables.items()):
            paths.append(self.writer.write_csv(f"{name}.csv", rows))
        summary: dict[str, Any] = {
            "experiment": self.experiment,
            "status": status,
            "config": self.config.to_dict(),
            "results": self.summary,
        }
        if error is not None:
            summary["error"] = error
        paths.append(self.writer.write_json("summary.json", summary))
        if self.certificate is not None:
            paths.append(self.writer.write_json("certificate.json", self.certificate))
        return paths


def load_config(experiment: str, config_path: Path, **overrides: Any) -> RunConfig:
    """Load and override a config, exiting with status 2 on any problem."""
    try:
        return RunConfig.from_file(config_path).with_overrides(experiment=experiment, **overrides)
    except (FileNotFoundError, ValueError) as e:
        click.echo(format_error(f"Error loading configuration: {e}"), err=True)
        raise click.exceptions.Exit(EXIT_CONFIG) from e


def run_experiment(
    experiment: str,
    config_path: Path,
    body: Callable[[RunSession], None],
    **overrides: Any,
) -> None:
    """Run ``body`` and flush its outputs.

    Numerical failures flush the partial outputs and exit with status 3;
    invalid parameter combinations surface as configuration errors (status 2).
    """
    config = load_config(experiment, config_path, **overrides)
    provenance = Provenance.create(
        __version__, config.config_hash(), config.seed, config.grid.n, stamp=config.timestamp
    )
    session = RunSession(config, ArtifactWriter(config.output_path, provenance))
    click.echo(format_info(f"Running {experiment} on profile '{config.profile.name}'", "⚙️"))

    try:
        body(session)
    except PecletError as e:
        paths = session.flush("failed", error=f"{type(e).__name__}: {e}")
        click.echo(format_error(f"Numerical failure in {experiment}: {e}"), err=True)
        click.echo(format_info(f"Partial outputs written to {paths[0].parent}", "📁"), err=True)
        raise click.exceptions.Exit(EXIT_NUMERICAL) from e
    except ValueError as e:
        click.echo(format_error(f"Invalid parameters for {experiment}: {e}"), err=True)
        raise click.exceptions.Exit(EXIT_CONFIG) from e

    for path in session.flush("ok"):
        click.echo(format_success(f"Wrote {path}"))
