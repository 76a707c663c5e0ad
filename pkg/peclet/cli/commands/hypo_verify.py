"""Hypo-verify command implementation."""

from pathlib import Path
from typing import Any

import click
import numpy as np

from peclet.cli.session import RunSession, run_experiment
from peclet.core.discretize import assemble_mode_operator
from peclet.core.errors import ConstraintViolated
from peclet.core.functional import certify_decay, equivalence_constants, phi_derivative_residual
from peclet.core.lemmas import worst_margins
from peclet.core.linalg import normalized, random_smooth_state
from peclet.core.semigroup import default_dt
from peclet.core.weights import build_weights
from peclet.utils.output import format_check, safe_echo

RICHARDSON_BAND = (3.5, 4.5)


def _run(session: RunSession) -> None:
    config = session.config
    hypo = config.hypo
    kind = config.operator_kind
    profile = config.profile.build(config.grid.n)
    certificate: dict[str, Any] = {"profile": profile.name, "kind": kind.value, "cases": []}
    session.certificate = certificate
    all_ok = True

    for nu in config.nu:
        for k in config.k:
            click.echo(safe_echo(f"🔒 Certifying nu={nu:g}, k={k:g}"))
            weights = build_weights(
                profile,
                nu,
                k,
                eps_tilde=hypo.eps_tilde,
                eps_beta=hypo.eps_beta,
                c0=hypo.c0,
                kappa0=hypo.kappa0,
                ladder=hypo.ladder,
                kappa_cal=hypo.kappa_cal,
                strict=False,
            )
            case: dict[str, Any] = {
                "nu": nu,
                "k": k,
                "lambda_tilde": weights.lambda_tilde,
                "eps_beta": weights.eps_beta,
                "constraints": weights.report_dict(),
            }
            certificate["cases"].append(case)
            failed = weights.failed()
            if failed:
                raise ConstraintViolated(failed[0].name, failed[0].margin)

            op = assemble_mode_operator(profile, nu, k, kind=kind)
            states = [
                normalized(op.grid, random_smooth_state(op.grid, np.random.default_rng([config.seed, i])))
                for i in range(hypo.states)
            ]
            trajectories = []
            for i, f0 in enumerate(states):
                cert = certify_decay(op, weights, f0, hypo.t_final, dt=config.time.dt)
                trajectories.append(cert.to_dict())
                session.add_result(
                    {
                        "profile": profile.name,
                        "kind": kind.value,
                        "nu": nu,
                        "k": k,
                        "state": i,
                        "eps_measured": cert.eps_measured,
                        "monotone": cert.monotone,
                        "trajectory_ok": cert.trajectory_ok,
                    }
                )

            dt = config.time.dt or default_dt(op)
            coarse = phi_derivative_residual(op, weights, states[0], dt)
            fine = phi_derivative_residual(op, weights, states[0], dt / 2.0)
            ratio = coarse.residual / fine.residual if fine.residual > 0.0 else float("inf")
            margins = worst_margins(weights, states, hypo.lemmas)
            equivalence = equivalence_constants(weights, states)

            eps_values = [t["eps_measured"] for t in trajectories]
            case.update(
                {
                    "trajectories": trajectories,
                    "eps_measured_min": min(eps_values),
                    "derivative_audit": {
                        "residual": coarse.residual,
                        "residual_half_dt": fine.residual,
                        "richardson_ratio": ratio,
                        "audit_gap": coarse.audit_gap,
                        "terms": coarse.terms,
                    },
                    "lemma_margins": margins,
                    "equivalence": {"lower": equivalence.lower, "upper": equivalence.upper},
                }
            )
            ok = (
                min(eps_values) > 0.0
                and all(t["trajectory_ok"] for t in trajectories)
                and all(margin >= 0.0 for margin in margins.values())
            )
            case["passed"] = ok
            all_ok = all_ok and ok
            session.add_rows(
                "lemma_margins",
                [{"nu": nu, "k": k, "lemma": name, "margin": m} for name, m in sorted(margins.items())],
            )
            click.echo(format_check(f"nu={nu:g} k={k:g} eps={min(eps_values):.4g}", ok))
            click.echo(
                format_check(
                    f"dPhi/dt residual ratio {ratio:.3f}",
                    RICHARDSON_BAND[0] <= ratio <= RICHARDSON_BAND[1],
                )
            )

    certificate["passed"] = all_ok
    session.summary.update({"profile": profile.name, "kind": kind.value, "passed": all_ok})


def hypo_verify_command(config_path: Path, **overrides: Any) -> None:
    """Build the weights, certify Φ-decay on random states and check the lemma margins."""
    run_experiment("hypo-verify", config_path, _run, **overrides)
