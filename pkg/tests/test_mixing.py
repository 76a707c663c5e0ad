"""Tests for inviscid mixing."""

import math

import numpy as np
import pytest

from peclet.core.errors import ResolutionExceeded
from peclet.core.mixing import (
    collapse_deviation,
    hminus1_norm,
    hminus1_oracle,
    inviscid_state,
    japanese,
    mixing_exponent,
    resolution_limit,
)
from peclet.core.profiles import make_profile


def test_hminus1_of_fourier_mode():
    """Test ‖e^{3iy}‖_{H⁻¹}² = 2π/10."""
    profile = make_profile("sin", "torus", 256)
    v = np.exp(3j * profile.grid.nodes)

    assert hminus1_norm(v) == pytest.approx(math.sqrt(2.0 * math.pi / 10.0), rel=1e-12)


def test_hminus1_against_finite_difference_oracle():
    """Test the FFT norm agrees with the (I − D2)⁻¹ quadratic form on smooth data."""
    profile = make_profile("sin", "torus", 256)
    y = profile.grid.nodes
    v = np.exp(2j * y) + 0.5 * np.cos(y)

    assert hminus1_norm(v) == pytest.approx(hminus1_oracle(profile.grid, v), rel=1e-3)


def test_inviscid_state_conserves_l2():
    """Test the inviscid evolution is a pointwise phase."""
    profile = make_profile("sin", "torus", 128)
    f0 = np.exp(1j * profile.grid.nodes)

    g = inviscid_state(profile, 2.0, f0, 7.5)

    np.testing.assert_allclose(np.abs(g), np.abs(f0), rtol=1e-14)
    assert hminus1_norm(g) < hminus1_norm(f0)


def test_japanese_bracket():
    assert japanese(np.array([0.0]))[0] == 1.0
    assert japanese(np.array([3.0]))[0] == pytest.approx(math.sqrt(10.0))


def test_collapse_in_kt():
    """Test curves for different k coincide at equal kt."""
    profile = make_profile("sin", "torus", 256)
    f0 = np.exp(1j * profile.grid.nodes)

    assert collapse_deviation(profile, f0, [1.0, 2.0, 4.0], [5.0, 10.0, 20.0]) < 1e-12


def test_resolution_limit():
    profile = make_profile("sin", "torus", 64)

    assert resolution_limit(profile, 1.0, profile.grid) == pytest.approx(16.0)
    assert resolution_limit(make_profile("zero", "torus", 64), 1.0, profile.grid) == math.inf


def test_unresolved_fit_raises():
    """Test a coarse grid cannot reach ⟨kt⟩ ≥ 100."""
    profile = make_profile("sin", "torus", 64)
    f0 = np.exp(1j * profile.grid.nodes)

    with pytest.raises(ResolutionExceeded, match="refine the grid"):
        mixing_exponent(profile, 1.0, f0)


def test_truncation_is_recorded():
    """Test times past the resolution limit are dropped and reported."""
    profile = make_profile("sin", "torus", 1024)
    f0 = np.exp(1j * profile.grid.nodes)
    times = np.geomspace(100.0, 400.0, 12).tolist()

    curve = mixing_exponent(profile, 1.0, f0, t_grid=times)

    assert curve.truncated_at == pytest.approx(256.0)
    assert curve.times.max() <= 256.0
    assert len(curve.rows()) == len(curve.times)


def test_mixing_requires_torus(couette_profile):
    """Test the channel is rejected."""
    with pytest.raises(ValueError, match="only defined on the torus"):
        inviscid_state(couette_profile, 1.0, np.ones(64), 1.0)
