"""Oracle-check command implementation."""

from pathlib import Path
from typing import Any, Optional

import click
import numpy as np

from peclet.cli.session import RunSession, run_experiment
from peclet.core.discretize import assemble_mode_operator
from peclet.core.errors import OracleMismatch
from peclet.core.profiles import ShearProfile
from peclet.core.semigroup import exponential_norm, operator_norm, propagator_norm, richardson_norm
from peclet.core.spectra import resolvent_norm, resolvent_oracle, scan_range
from peclet.core.stochastic import NoiseSpectrum, covariance_block, lyapunov_oracle
from peclet.utils.output import format_check, format_warning, safe_echo

ORACLE_TOL = 1e-6
POWER_TOL = 1e-12
POWER_MAX_ITER = 5000
ORACLE_TIME = 5.0
ORACLE_DT = 0.01
COVARIANCE_DT = 0.005
MAX_ORACLE_GRID = 128


class OraclePanel:
    """Accumulates value/oracle comparisons into result rows."""

    def __init__(self, session: RunSession) -> None:
        self.session = session
        self.failures: list[str] = []

    def check(
        self, name: str, nu: float, k: float, value: float, reference: float, error: Optional[float] = None
    ) -> None:
        if error is None:
            error = abs(value - reference) / max(abs(reference), np.finfo(np.float64).tiny)
        passed = error <= ORACLE_TOL
        self.session.add_result(
            {
                "check": name,
                "nu": nu,
                "k": k,
                "value": value,
                "oracle": reference,
                "rel_error": error,
                "passed": passed,
            }
        )
        click.echo(format_check(f"{name} nu={nu:g} k={k:g}", passed, f"{error:.2e}"))
        if not passed:
            self.failures.append(f"{name}(nu={nu:g}, k={k:g})")


def covariance_comparison(
    profile: ShearProfile, noise: NoiseSpectrum, nu: float, a: float, k: int
) -> tuple[float, float, float]:
    """(‖C_k‖, ‖X‖, ‖C_k − X‖/‖X‖) with X the dense Lyapunov solution."""
    op = assemble_mode_operator(profile, nu, float(k))
    block = covariance_block(profile, noise, nu, a, k, dt=COVARIANCE_DT, richardson=True)
    oracle = lyapunov_oracle(op, noise, nu, a, k)
    scale = float(np.linalg.norm(oracle, 2))
    return (
        float(np.linalg.norm(block.matrix, 2)),
        scale,
        float(np.linalg.norm(block.matrix - oracle, 2)) / scale,
    )


def _run(session: RunSession) -> None:
    config = session.config
    profile = config.profile.build(config.grid.n)
    if profile.grid.n > MAX_ORACLE_GRID:
        click.echo(format_warning(f"Dense oracles on n={profile.grid.n} points will be slow"))
    noise = config.noise.spectrum()
    panel = OraclePanel(session)

    for nu in config.nu:
        for k in config.k:
            click.echo(safe_echo(f"🔍 Dense oracles for nu={nu:g}, k={k:g}"))
            op = assemble_mode_operator(profile, nu, k, kind=config.operator_kind)
            low, high = scan_range(op)
            lam = 0.5 * (low + high)

            panel.check(
                "operator_norm",
                nu,
                k,
                operator_norm(op, ORACLE_TIME, dt=ORACLE_DT, tol=POWER_TOL, max_iter=POWER_MAX_ITER),
                propagator_norm(op, ORACLE_TIME, dt=ORACLE_DT),
            )
            panel.check(
                "exponential_norm",
                nu,
                k,
                richardson_norm(op, ORACLE_TIME, dt=ORACLE_DT),
                exponential_norm(op, ORACLE_TIME),
            )
            panel.check(
                "resolvent_norm",
                nu,
                k,
                resolvent_norm(op, lam, tol=POWER_TOL, max_iter=POWER_MAX_ITER),
                resolvent_oracle(op, lam),
            )
            mode = int(abs(k))
            if profile.grid.periodic and mode == abs(k) and mode <= noise.K and noise.row(mode):
                value, reference, error = covariance_comparison(profile, noise, nu, config.a[0], mode)
                panel.check("covariance_block", nu, k, value, reference, error)

    session.summary.update(
        {
            "profile": profile.name,
            "grid": profile.grid.n,
            "tolerance": ORACLE_TOL,
            "checks": len(session.results),
            "failures": panel.failures,
            "passed": not panel.failures,
        }
    )
    if panel.failures:
        raise OracleMismatch(
            f"{len(panel.failures)} oracle comparisons exceed {ORACLE_TOL:g}: {', '.join(panel.failures)}"
        )


def oracle_check_command(config_path: Path, **overrides: Any) -> None:
    """Compare the sparse computations with dense references on a small grid."""
    run_experiment("oracle-check", config_path, _run, **overrides)
