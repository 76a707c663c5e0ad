"""Mixing command implementation."""

import math
from pathlib import Path
from typing import Any

import click
import numpy as np

from peclet.cli.session import RunSession, run_experiment
from peclet.core.mixing import collapse_deviation, mixing_exponent, resolution_limit
from peclet.utils.output import format_check, safe_echo

SLOPE_BAND = 0.05
COLLAPSE_TOL = 0.05


def _run(session: RunSession) -> None:
    config = session.config
    profile = config.profile.build(config.grid.n)
    grid = profile.grid
    f0 = np.exp(1j * grid.nodes) / math.sqrt(2.0 * math.pi)
    target = -1.0 / (profile.n0 + 1.0)

    slopes = {}
    for k in config.k:
        click.echo(safe_echo(f"🌀 Inviscid mixing for k={k:g} (n={grid.n})"))
        curve = mixing_exponent(profile, k, f0, t_grid=config.time.t_grid)
        session.add_rows("mixing_curves", curve.rows())
        passed = abs(curve.slope - target) <= SLOPE_BAND
        slopes[repr(k)] = {"slope": curve.slope, "truncated_at": curve.truncated_at, "passed": passed}
        session.add_result({"profile": profile.name, "k": k, "slope": curve.slope, "target": target})
        click.echo(format_check(f"k={k:g}: slope {curve.slope:.4f}", passed, f"target {target:.4f}"))

    limit = min(abs(k) * resolution_limit(profile, k, grid) for k in config.k)
    kt_values = config.time.kt_grid or [float(s) for s in np.geomspace(10.0, max(limit, 20.0), 8) if s <= limit]
    collapse = collapse_deviation(profile, f0, config.k, kt_values) if len(config.k) > 1 else 0.0

    session.summary.update(
        {
            "profile": profile.name,
            "target": target,
            "slopes": slopes,
            "collapse_deviation": collapse,
            "passed": all(s["passed"] for s in slopes.values()) and collapse <= COLLAPSE_TOL,
        }
    )


def mixing_command(config_path: Path, **overrides: Any) -> None:
    """Fit the H⁻¹ decay of e^{−ikut}f0 and check the collapse in kt."""
    run_experiment("mixing", config_path, _run, **overrides)
