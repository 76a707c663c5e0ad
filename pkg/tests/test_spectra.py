"""Tests for resolvent norms, the pseudospectral gap and model spectral gaps."""

import math

import numpy as np
import pytest

from peclet.core.discretize import OperatorKind, assemble_mode_operator
from peclet.core.errors import ZeroInput
from peclet.core.partition import build_partition
from peclet.core.semigroup import DecayCurve
from peclet.core.spectra import (
    PseudoGap,
    localized_gap_margin,
    pseudo_gap,
    psi_bracket,
    resolvent_integral_bound,
    resolvent_norm,
    resolvent_oracle,
    scan_range,
    schrodinger_ground_energy,
)


def test_resolvent_without_shear(zero_profile):
    """Test ‖A⁻¹‖ = 1/(νk²) for the heat operator."""
    op = assemble_mode_operator(zero_profile, 0.1, 2.0)

    assert resolvent_norm(op, 0.0, tol=1e-12, max_iter=1000) == pytest.approx(1.0 / 0.4, rel=1e-8)


def test_resolvent_matches_dense_oracle(sin_profile):
    """Test power iteration against the smallest singular value."""
    op = assemble_mode_operator(sin_profile, 1e-2, 1.0)
    value = resolvent_norm(op, 0.3, tol=1e-12, max_iter=5000)

    assert value == pytest.approx(resolvent_oracle(op, 0.3), rel=1e-6)


def test_scan_range(sin_profile, zero_profile):
    """Test the λ-window covers k·range(u) with a margin."""
    low, high = scan_range(assemble_mode_operator(sin_profile, 1e-2, 2.0))
    assert low == pytest.approx(-2.4, rel=1e-9)
    assert high == pytest.approx(2.4, rel=1e-9)

    assert scan_range(assemble_mode_operator(zero_profile, 1e-2, 1.0)) == (-1.0, 1.0)


def test_pseudo_gap_without_shear(zero_profile):
    """Test Ψ = νk² when the operator is normal."""
    gap = pseudo_gap(assemble_mode_operator(zero_profile, 0.1, 1.0))

    assert gap.psi == pytest.approx(0.1, rel=1e-4)
    assert abs(gap.argmax_lambda) < 1e-3
    assert gap.lambdas.size == 256
    assert gap.peak == pytest.approx(1.0 / gap.psi)


def test_pseudo_gap_grows_with_shear(sin_profile):
    """Test shear enhances the gap beyond the viscous rate νk²."""
    op = assemble_mode_operator(sin_profile, 1e-3, 1.0)
    gap = pseudo_gap(op, points=64)

    assert gap.psi > 1e-3
    assert np.all(gap.resolvent <= gap.peak * (1.0 + 1e-6))
    assert len(gap.rows(op)) == 64


def test_hypoelliptic_gap_is_smaller(sin_profile):
    """Test dropping νk² lowers Ψ."""
    elliptic = pseudo_gap(assemble_mode_operator(sin_profile, 1e-2, 1.0), points=64)
    hypo = pseudo_gap(
        assemble_mode_operator(sin_profile, 1e-2, 1.0, kind=OperatorKind.HYPOELLIPTIC), points=64
    )

    assert hypo.psi < elliptic.psi


def test_resolvent_integral_bound():
    """Test ∫e^{−t}dt = 1 with the exponential tail."""
    times = np.linspace(0.0, 10.0, 2001)
    curve = DecayCurve(
        times=times,
        norms=np.exp(-times),
        nu=0.1,
        k=1.0,
        kind=OperatorKind.ELLIPTIC,
        profile="synthetic",
    )

    assert resolvent_integral_bound(curve) == pytest.approx(1.0, rel=1e-5)


def test_harmonic_oscillator_ground_energy():
    """Test −σ∂zz + z² has ground energy √σ."""
    energy, scaled = schrodinger_ground_energy(1, 1.0, 1.0)
    assert energy == pytest.approx(1.0, rel=1e-4)

    energy, scaled = schrodinger_ground_energy(1, 1.0, 1e-4)
    assert energy == pytest.approx(1e-2, rel=1e-4)
    assert scaled == pytest.approx(1.0, rel=1e-4)


def test_half_line_matches_even_ground_state():
    """Test a no-flux wall at z = 0 keeps the (even) ground energy."""
    full, _ = schrodinger_ground_energy(1, 1.0, 1e-2)
    half, _ = schrodinger_ground_energy(1, 1.0, 1e-2, half_line=True)

    assert half == pytest.approx(full, rel=1e-4)


def test_quartic_scaling():
    """Test b(σ)/σ^{2/3} is independent of σ for z⁴."""
    _, first = schrodinger_ground_energy(2, 1.0, 1e-2)
    _, second = schrodinger_ground_energy(2, 1.0, 1e-5)

    assert first == pytest.approx(second, rel=1e-4)


def test_model_parameters_are_validated():
    """Test j, c and σ checks."""
    with pytest.raises(ValueError):
        schrodinger_ground_energy(0, 1.0, 1e-2)
    with pytest.raises(ValueError):
        schrodinger_ground_energy(1, 1.0, 0.0)


def test_localized_gap_margin(fine_sin_profile):
    """Test the localized ratios on a smooth state."""
    partition = build_partition(fine_sin_profile)
    f = np.exp(1j * fine_sin_profile.grid.nodes) + 0.5

    margin = localized_gap_margin(fine_sin_profile, partition, 1e-3, f)

    assert set(margin.pieces) == {"0", "1"}
    assert margin.margin == min(margin.pieces.values())
    assert margin.margin > 0.0
    assert margin.global_margin > 0.0


def test_localized_gap_rejects_zero_state(fine_sin_profile):
    """Test a vanishing state and a wrong shape."""
    partition = build_partition(fine_sin_profile)

    with pytest.raises(ZeroInput):
        localized_gap_margin(fine_sin_profile, partition, 1e-3, np.zeros(fine_sin_profile.grid.n))
    with pytest.raises(ValueError):
        localized_gap_margin(fine_sin_profile, partition, 1e-3, np.ones(5))


def test_psi_bracket():
    """Test the two normalisations of Ψ."""
    sample = PseudoGap(psi=0.02, argmax_lambda=0.0, lambdas=np.zeros(1), resolvent=np.zeros(1))
    c1, c2 = psi_bracket(sample, 0.01, 4.0)

    assert c1 == pytest.approx(8.0)
    assert c2 == pytest.approx(2.0)
    assert math.isclose(sample.peak, 50.0)
