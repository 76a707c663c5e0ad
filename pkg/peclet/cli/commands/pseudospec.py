"""Pseudospec command implementation."""

from pathlib import Path
from typing import Any, Optional

import click
import numpy as np

from peclet.cli.session import RunSession, run_experiment
from peclet.core.discretize import OperatorKind, assemble_mode_operator
from peclet.core.grid import Domain, RealArray
from peclet.core.profiles import make_profile
from peclet.core.semigroup import (
    calibrate_ggn_constant,
    decay_curve,
    geometric_times,
    ggn_violations,
    hypoelliptic_bound,
)
from peclet.core.spectra import psi_bracket, pseudo_gap, resolvent_integral_bound
from peclet.core.weights import lambda_tilde, log_correction
from peclet.utils.output import format_check, safe_echo

GGN_SLACK = 1e-3
# curves run until e^{−Ψt/2} has dropped by this many e-folds
DECAY_EFOLDS = 20.0


def _curve_times(config_grid: Optional[list[float]], psi: float) -> RealArray:
    if config_grid is not None:
        return np.asarray(config_grid, dtype=np.float64)
    return geometric_times(2.0 * DECAY_EFOLDS / psi, count=32)


def _run(session: RunSession) -> None:
    config = session.config
    kind = config.operator_kind
    profile = config.profile.build(config.grid.n)
    order = profile.nc if profile.domain is Domain.CHANNEL else profile.n0
    reference = make_profile("zero", profile.domain, config.grid.n)

    # calibrated once on the normal operator u ≡ 0
    op0 = assemble_mode_operator(reference, config.nu[0], config.k[0])
    gap0 = pseudo_gap(op0)
    curve0 = decay_curve(op0, _curve_times(config.time.t_grid, gap0.psi), dt=config.time.dt)
    c_univ = calibrate_ggn_constant(curve0, op0, gap0.psi)

    all_ok = True
    cases = []
    for nu in config.nu:
        for k in config.k:
            op = assemble_mode_operator(profile, nu, k, kind=kind)
            click.echo(safe_echo(f"🔍 Scanning the resolvent for nu={nu:g}, k={k:g}"))
            gap = pseudo_gap(op, workers=config.workers)
            curve = decay_curve(
                op, _curve_times(config.time.t_grid, gap.psi), dt=config.time.dt, seed=config.seed
            )
            violations = ggn_violations(curve, op, gap.psi, c_univ, slack=GGN_SLACK)
            integral = resolvent_integral_bound(curve)
            predicted = lambda_tilde(nu, k, order)
            c1, c2 = psi_bracket(gap, predicted, log_correction(nu, k))
            integral_ok = gap.peak <= integral * (1.0 + GGN_SLACK)
            if kind is OperatorKind.HYPOELLIPTIC:
                parabolic = [
                    float(t)
                    for t, norm in zip(curve.times, curve.norms)
                    if norm > hypoelliptic_bound(op, float(t), gap.psi, c_univ) * (1.0 + GGN_SLACK)
                ]
                ok = not parabolic and integral_ok
            else:
                parabolic = []
                ok = not violations and integral_ok
            all_ok = all_ok and ok

            session.add_result(
                {
                    "profile": profile.name,
                    "kind": kind.value,
                    "nu": nu,
                    "k": k,
                    "psi": gap.psi,
                    "argmax_lambda": gap.argmax_lambda,
                    "lambda_tilde": predicted,
                    "c1": c1,
                    "c2": c2,
                    "resolvent_integral": integral,
                    "ggn_violations": len(violations),
                    "parabolic_violations": len(parabolic),
                    "coarse": gap.coarse,
                }
            )
            session.add_rows("resolvent_profiles", gap.rows(op))
            session.add_rows("decay_curves", curve.rows())
            cases.append({"nu": nu, "k": k, "psi": gap.psi, "ggn_ok": not violations, "integral_ok": integral_ok})
            click.echo(format_check(f"nu={nu:g} k={k:g} Psi={gap.psi:.6g}", ok))

    session.summary.update(
        {
            "profile": profile.name,
            "kind": kind.value,
            "c_univ": c_univ,
            "cases": cases,
            "passed": all_ok,
        }
    )


def pseudospec_command(config_path: Path, **overrides: Any) -> None:
    """Compute Ψ and check the sector and resolvent-integral bounds."""
    run_experiment("pseudospec", config_path, _run, **overrides)
