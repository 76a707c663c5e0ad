"""Tests for semigroup propagation, operator norms and rate fits."""

import math

import numpy as np
import pytest

from peclet.core.discretize import OperatorKind, assemble_mode_operator
from peclet.core.errors import WindowEmpty
from peclet.core.semigroup import (
    DecayCurve,
    DecayFit,
    RateMeasurement,
    RateTask,
    calibrate_ggn_constant,
    converge_dt,
    decay_curve,
    default_dt,
    exponential_norm,
    fit_decay_rate,
    fit_exponents,
    geometric_times,
    ggn_bound,
    hypoelliptic_bound,
    measure_rate,
    operator_norm,
    propagate,
    propagator_norm,
    richardson_norm,
    sector_cotangent,
    sweep_exponents,
)


def _synthetic_curve(rate, prefactor=1.0, times=None):
    times = np.linspace(0.0, 40.0 / rate, 81) if times is None else times
    return DecayCurve(
        times=times,
        norms=np.minimum(1.0, prefactor * np.exp(-rate * times)),
        nu=1e-3,
        k=1.0,
        kind=OperatorKind.ELLIPTIC,
        profile="synthetic",
    )


def test_heat_flow_norm(zero_profile):
    """Test ‖e^{−tA}‖ = e^{−νk²t} without shear."""
    op = assemble_mode_operator(zero_profile, 0.01, 2.0)

    assert operator_norm(op, 10.0, tol=1e-10) == pytest.approx(math.exp(-0.4), rel=1e-6)
    assert operator_norm(op, 0.0) == 1.0


def test_crank_nicolson_is_unitary_without_viscosity(sin_profile):
    """Test pure transport preserves the L² norm."""
    op = assemble_mode_operator(sin_profile, 0.0, 1.0)
    f0 = np.exp(1j * sin_profile.grid.nodes)
    f = propagate(op, f0, 7.3)

    assert sin_profile.grid.norm2(f) == pytest.approx(sin_profile.grid.norm2(f0), rel=1e-12)


def test_propagate_fourier_mode(fine_sin_profile):
    """Test a Fourier mode decays at ν(k² + η²) without transport."""
    grid = fine_sin_profile.grid
    op = assemble_mode_operator(fine_sin_profile, 0.1, 0.0)
    f0 = np.exp(3j * grid.nodes)
    f = propagate(op, f0, 1.0)

    assert math.sqrt(grid.norm2(f) / grid.norm2(f0)) == pytest.approx(math.exp(-0.9), rel=1e-3)


def test_propagate_lands_on_final_time(zero_profile):
    """Test a final time that is not a multiple of dt."""
    op = assemble_mode_operator(zero_profile, 0.1, 1.0)
    f0 = np.ones(zero_profile.grid.n, dtype=np.complex128)
    f = propagate(op, f0, 1.234, dt=0.1)

    assert np.allclose(f, math.exp(-0.1234) * f0, rtol=1e-4)


def test_propagate_rejects_bad_input(zero_profile):
    """Test shape and time checks."""
    op = assemble_mode_operator(zero_profile, 0.1, 1.0)

    with pytest.raises(ValueError):
        propagate(op, np.ones(3), 1.0)
    with pytest.raises(ValueError):
        propagate(op, np.ones(op.n), -1.0)


def test_sparse_norm_matches_dense_propagator(sin_profile):
    """Test power iteration against the SVD of the dense CN matrix."""
    op = assemble_mode_operator(sin_profile, 1e-2, 1.0)
    sparse = operator_norm(op, 5.0, dt=0.01, tol=1e-12, max_iter=5000)

    assert sparse == pytest.approx(propagator_norm(op, 5.0, dt=0.01), rel=1e-6)


def test_richardson_matches_matrix_exponential(sin_profile):
    """Test the extrapolated CN norm against expm."""
    op = assemble_mode_operator(sin_profile, 1e-3, 1.0)

    assert richardson_norm(op, 5.0, dt=0.01) == pytest.approx(exponential_norm(op, 5.0), rel=1e-6)


def test_default_dt(sin_profile):
    """Test the step-size rule."""
    op = assemble_mode_operator(sin_profile, 1e-2, 10.0)

    assert default_dt(op) == pytest.approx(0.05 / (10.0 + 1.0 + 1.0))


def test_decay_curve_is_monotone(sin_profile):
    """Test ‖e^{−tA}‖ is non-increasing in t."""
    op = assemble_mode_operator(sin_profile, 1e-2, 1.0)
    curve = decay_curve(op, t_grid=geometric_times(50.0, 12))

    assert curve.norms[0] == 1.0
    assert np.all(np.diff(curve.norms) <= 1e-9)
    assert len(curve.rows()) == 12


def test_decay_curve_rejects_unsorted_times(sin_profile):
    """Test the time grid must increase."""
    op = assemble_mode_operator(sin_profile, 1e-2, 1.0)

    with pytest.raises(ValueError):
        decay_curve(op, t_grid=[0.0, 2.0, 1.0])


def test_fit_decay_rate_on_exponential():
    """Test the log-linear fit recovers rate and prefactor."""
    fit = fit_decay_rate(_synthetic_curve(0.5, prefactor=2.0))

    assert fit.rate == pytest.approx(0.5)
    assert fit.prefactor == pytest.approx(2.0)
    assert fit.residual < 1e-10


def test_fit_decay_rate_needs_samples():
    """Test a window with too few samples."""
    curve = _synthetic_curve(0.5, times=np.array([0.0, 1.0, 2.0]))

    with pytest.raises(WindowEmpty):
        fit_decay_rate(curve)


def test_sector_bound_without_shear(zero_profile):
    """Test the sector constant calibrates to one on u ≡ 0."""
    op = assemble_mode_operator(zero_profile, 0.1, 1.0)
    curve = decay_curve(op, t_grid=np.linspace(0.0, 20.0, 11))
    # Ψ = ν(k² + 0) for the normal heat operator
    psi = 0.1

    assert sector_cotangent(op) == 0.0
    assert calibrate_ggn_constant(curve, op, psi) == pytest.approx(1.0)
    assert ggn_bound(op, 20.0, psi) == pytest.approx(math.exp(-1.0))


def test_sector_cotangent_with_shear(sin_profile):
    """Test cot δ = ‖u‖∞|k|/(ν(1 + k²))."""
    op = assemble_mode_operator(sin_profile, 1e-2, 1.0)

    assert sector_cotangent(op) == pytest.approx(50.0)


def test_fit_exponents_recovers_scaling():
    """Test the (ν, k) regression on exact power laws."""
    measurements = []
    for nu in (1e-4, 1e-5, 1e-6):
        for k in (1.0, 4.0):
            rate = 0.3 * nu**0.5 * k**0.5
            fit = DecayFit(rate=rate, prefactor=1.0, window=(1e-8, 1e-1), samples=10, residual=0.0)
            measurements.append(RateMeasurement(nu=nu, k=k, fit=fit, curve=_synthetic_curve(rate)))
    result = fit_exponents(measurements)

    assert result.nu_exponent == pytest.approx(0.5)
    assert result.k_exponent == pytest.approx(0.5)
    assert result.rate == pytest.approx(0.3)
    with pytest.raises(ValueError):
        fit_exponents(measurements[:1])


def test_sweep_exponents_enforces_kappa0(sin_profile):
    """Test elliptic sweeps stay in the ν/|k| ≤ κ₀ regime."""
    with pytest.raises(ValueError, match="kappa0"):
        sweep_exponents(sin_profile, OperatorKind.ELLIPTIC, [0.1, 0.05], [1.0])


def test_converge_dt_keeps_settled_step(sin_profile):
    """Test the returned step agrees with its halving to the tolerance."""
    op = assemble_mode_operator(sin_profile, 1e-2, 1.0)
    dt = converge_dt(op, 5.0)

    assert 0.0 < dt <= default_dt(op)
    coarse = operator_norm(op, 5.0, dt=dt, tol=1e-6)
    fine = operator_norm(op, 5.0, dt=dt / 2.0, tol=1e-6)
    assert abs(coarse - fine) <= 1e-4 * fine


def test_converge_dt_refines_coarse_step(sin_profile):
    """Test a step far above the transport scale is halved."""
    op = assemble_mode_operator(sin_profile, 1e-2, 1.0)

    assert converge_dt(op, 6.0, dt=2.0) < 2.0


@pytest.mark.slow
def test_measure_rate_uses_converged_step(sin_profile):
    """Test rate measurements record the step the window entry converged at."""
    task = RateTask(sin_profile, OperatorKind.ELLIPTIC, 1e-2, 1.0, window=(0.05, 0.5))
    op = assemble_mode_operator(sin_profile, 1e-2, 1.0)

    measured = measure_rate(task)
    fixed = measure_rate(
        RateTask(sin_profile, OperatorKind.ELLIPTIC, 1e-2, 1.0, window=(0.05, 0.5), converge=False)
    )

    assert 0.0 < measured.curve.dt <= default_dt(op)
    assert fixed.curve.dt == pytest.approx(default_dt(op))
    assert measured.rate > 0.0
    assert measured.rate == pytest.approx(fixed.rate, rel=1e-2)


def test_hypoelliptic_bound(sin_profile):
    """Test min{1, c|k|/(νΨ)·e^{−Ψt/2}}."""
    op = assemble_mode_operator(sin_profile, 1e-2, 2.0)

    assert hypoelliptic_bound(op, 0.0, 0.5) == 1.0
    assert hypoelliptic_bound(op, 100.0, 0.5) == pytest.approx(400.0 * math.exp(-25.0))
    ratio = hypoelliptic_bound(op, 120.0, 0.5) / hypoelliptic_bound(op, 100.0, 0.5)
    assert ratio == pytest.approx(math.exp(-5.0))
    assert hypoelliptic_bound(op, 100.0, 0.5, c=0.5) == pytest.approx(200.0 * math.exp(-25.0))
    assert hypoelliptic_bound(op, 100.0, 0.0) == 1.0
    inviscid = assemble_mode_operator(sin_profile, 0.0, 2.0)
    assert hypoelliptic_bound(inviscid, 100.0, 0.5) == 1.0
