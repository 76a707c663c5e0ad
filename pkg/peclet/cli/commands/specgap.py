"""Specgap command implementation."""

import math
from pathlib import Path
from typing import Any

import click
import numpy as np

from peclet.cli.session import RunSession, run_experiment
from peclet.core.grid import Domain
from peclet.core.linalg import random_smooth_state
from peclet.core.partition import build_partition, measure_c_varsigma
from peclet.core.spectra import localized_gap_margin, schrodinger_ground_energy
from peclet.utils.output import format_check, safe_echo

SLOPE_BAND = 0.02
LOCAL_STATES = 8


def _run(session: RunSession) -> None:
    config = session.config
    sigmas = sorted(config.sigma)
    click.echo(safe_echo(f"🧮 Model ground energies for j in {config.orders}"))

    slopes: dict[str, Any] = {}
    variants = [(j, False) for j in config.orders] + [(1, True)]
    for j, half_line in variants:
        energies = []
        for sigma in sigmas:
            energy, scaled = schrodinger_ground_energy(j, 1.0, sigma, half_line=half_line)
            energies.append(energy)
            session.add_result(
                {
                    "j": j,
                    "half_line": half_line,
                    "sigma": sigma,
                    "energy": energy,
                    "scaled": scaled,
                }
            )
        label = f"j={j}" + (" half-line" if half_line else "")
        target = 0.5 if half_line else j / (j + 1.0)
        if len(sigmas) >= 2:
            slope = float(np.polyfit(np.log(sigmas), np.log(energies), 1)[0])
            passed = abs(slope - target) <= SLOPE_BAND
            slopes[label] = {"slope": slope, "target": target, "passed": passed}
            click.echo(format_check(f"{label}: slope {slope:.4f}", passed, f"target {target:.4f}"))

    profile = config.profile.build(config.grid.n)
    partition = build_partition(profile)
    states = [
        random_smooth_state(profile.grid, np.random.default_rng([config.seed, i]))
        for i in range(LOCAL_STATES)
    ]
    local: dict[str, Any] = {}
    for sigma in sigmas:
        margins = [localized_gap_margin(profile, partition, sigma, f) for f in states]
        worst = min(m.margin for m in margins)
        worst_global = min(m.global_margin for m in margins)
        local[repr(sigma)] = {"margin": worst, "global_margin": worst_global}
        session.add_rows(
            "localized_gaps",
            [
                {"sigma": sigma, "state": i, "piece": label, "ratio": ratio}
                for i, m in enumerate(margins)
                for label, ratio in sorted(m.pieces.items())
            ],
        )

    session.summary.update(
        {
            "slopes": slopes,
            "localized": local,
            "profile": profile.name,
            "c_varsigma": measure_c_varsigma(partition),
            "walls": profile.domain is Domain.CHANNEL,
            "passed": all(s["passed"] for s in slopes.values())
            and all(math.isfinite(v["margin"]) and v["margin"] > 0.0 for v in local.values()),
        }
    )


def specgap_command(config_path: Path, **overrides: Any) -> None:
    """Model spectral gaps σ^{j/(j+1)} and localized gap ratios on random states."""
    run_experiment("specgap", config_path, _run, **overrides)
