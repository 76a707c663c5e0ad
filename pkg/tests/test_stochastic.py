"""Tests for the covariance of the stochastically forced problem."""

import math

import numpy as np
import pytest

from peclet.cli.commands.kuksin import _zero_mode_error
from peclet.core.discretize import assemble_mode_operator
from peclet.core.errors import TailNotReached
from peclet.core.stochastic import (
    CovarianceBlock,
    NoiseSpectrum,
    covariance_block,
    covariance_norm_sweep,
    covariance_upper_bound,
    lyapunov_oracle,
    stationary_energy_check,
    zero_mode_variances,
)


def test_rational_spectrum_box():
    """Test the default noise law on its box."""
    noise = NoiseSpectrum.rational(K=2, J=2)

    assert (0, 0) not in noise.coefficients
    assert noise.coefficients[(1, 2)] == pytest.approx(1.0 / 6.0)
    assert noise.x_modes() == [0, 1, 2]
    assert NoiseSpectrum.rational(K=2, J=2, kill_zero_mode=True).x_modes() == [1, 2]


def test_explicit_spectrum_fills_conjugate_partner():
    """Test the reality pairing ψ_{−k,−j} = conj(ψ_{k,j})."""
    noise = NoiseSpectrum.explicit([[1, 2, 0.5, 0.25]], K=2, J=2)

    assert noise.coefficients[(1, 2)] == complex(0.5, 0.25)
    assert noise.coefficients[(-1, -2)] == complex(0.5, -0.25)
    assert noise.total == pytest.approx(2.0 * (0.5**2 + 0.25**2))
    assert noise.conjugated().total == pytest.approx(noise.total)


@pytest.mark.parametrize(
    "entries",
    [
        [[3, 0, 1.0]],
        [[0, 0, 1.0]],
        [[1, 1, 1.0], [-1, -1, 2.0]],
        [[1, 1]],
    ],
)
def test_explicit_spectrum_rejects_bad_entries(entries):
    """Test out-of-box, forced (0, 0), broken pairing and short entries."""
    with pytest.raises(ValueError):
        NoiseSpectrum.explicit(entries, K=2, J=2)


def test_unknown_noise_law():
    """Test an unsupported law name."""
    with pytest.raises(ValueError, match="Unknown noise law"):
        NoiseSpectrum.from_config({"law": "white"})


def test_single_mode_block_matches_heat_flow(zero_profile):
    """Test ‖C_k‖ = ν^{a−1}/(2k²) for a constant-in-y mode without shear."""
    noise = NoiseSpectrum.explicit([[1, 0, 1.0]], K=1, J=1)
    nu, a = 0.1, 0.5

    block = covariance_block(zero_profile, noise, nu, a, 1)

    assert block.norm() == pytest.approx(nu ** (a - 1.0) / 2.0, rel=1e-4)
    assert block.horizon > 0.0


def test_block_is_hermitian_and_positive(sin_profile):
    """Test C_k is a covariance: Hermitian and positive semi-definite."""
    noise = NoiseSpectrum.rational(K=2, J=2)

    block = covariance_block(sin_profile, noise, 0.1, 1.0, 1)
    eigenvalues = np.linalg.eigvalsh(block.matrix)

    assert np.allclose(block.matrix, block.matrix.conj().T)
    assert eigenvalues.min() >= -1e-10 * eigenvalues.max()
    assert block.trace == pytest.approx(float(eigenvalues.sum()))


def test_richardson_block_matches_lyapunov_oracle(sin_profile):
    """Test the extrapolated quadrature against the dense Lyapunov solve."""
    noise = NoiseSpectrum.rational(K=2, J=2)
    nu, a, k = 0.1, 1.0, 1

    block = covariance_block(sin_profile, noise, nu, a, k, dt=0.01, richardson=True)
    oracle = lyapunov_oracle(assemble_mode_operator(sin_profile, nu, float(k)), noise, nu, a, k)

    scale = np.linalg.norm(oracle, 2)
    assert np.linalg.norm(block.matrix - oracle, 2) / scale < 1e-6


def test_plain_quadrature_error_is_quadratic(sin_profile):
    """Test the CN trapezoid sum is off by a pure dt² term, so halving dt quarters it."""
    noise = NoiseSpectrum.rational(K=2, J=2)
    nu, a, k = 0.1, 1.0, 1
    oracle = lyapunov_oracle(assemble_mode_operator(sin_profile, nu, float(k)), noise, nu, a, k)

    errors = [
        np.linalg.norm(covariance_block(sin_profile, noise, nu, a, k, dt=dt).matrix - oracle, 2)
        for dt in (0.04, 0.02)
    ]

    assert errors[0] / errors[1] == pytest.approx(4.0, rel=2e-2)


def test_zero_block_closed_form(sin_profile):
    """Test the k = 0 block is diagonal in the Fourier basis."""
    noise = NoiseSpectrum.rational(K=1, J=2)
    nu, a = 1e-3, 0.9

    block = covariance_block(sin_profile, noise, nu, a, 0)
    variances = zero_mode_variances(noise, nu, a)

    assert math.isinf(block.horizon)
    assert sorted(variances) == [-2, -1, 1, 2]
    assert variances[1] == pytest.approx(nu ** (a - 1.0) * 0.25 / 2.0)
    assert _zero_mode_error(sin_profile, noise, nu, a) < 1e-12


def test_block_rejects_bad_arguments(sin_profile, couette_profile):
    """Test viscosity, mode and domain checks."""
    noise = NoiseSpectrum.rational(K=1, J=1)

    with pytest.raises(ValueError):
        covariance_block(sin_profile, noise, 0.0, 1.0, 1)
    with pytest.raises(ValueError):
        covariance_block(sin_profile, noise, 0.1, 1.0, 2)
    with pytest.raises(ValueError, match="torus"):
        covariance_block(couette_profile, noise, 0.1, 1.0, 1)


def test_tail_not_reached_carries_partial_block(sin_profile):
    """Test an exhausted time budget raises with the partial integral."""
    noise = NoiseSpectrum.rational(K=1, J=1)

    with pytest.raises(TailNotReached) as excinfo:
        covariance_block(sin_profile, noise, 1e-3, 1.0, 1, dt=0.01, budget=0.5)

    partial = excinfo.value.partial
    assert isinstance(partial, CovarianceBlock)
    assert partial.horizon >= 0.5
    assert partial.error > 0.0
    assert np.allclose(partial.matrix, partial.matrix.conj().T)


def test_energy_balance_without_shear(zero_profile):
    """Test 2ν·E‖f‖²_{H¹} = ν^a‖Ψ‖² for pure diffusion."""
    noise = NoiseSpectrum.explicit([[1, 1, 1.0], [0, 2, 0.5]], K=1, J=2)

    assert stationary_energy_check(zero_profile, noise, 0.1, 0.8) < 1e-6


def test_energy_balance_with_shear(sin_profile):
    """Test the energy identity holds with transport."""
    noise = NoiseSpectrum.rational(K=1, J=1, kill_zero_mode=True)

    assert stationary_energy_check(sin_profile, noise, 0.1, 1.0, dt=0.01) < 1e-4


def test_norm_sweep_slope_without_shear(zero_profile):
    """Test log‖Q_ν‖ has slope a − 1 when only heat flow acts."""
    noise = NoiseSpectrum.explicit([[1, 0, 1.0]], K=1, J=1)

    sweep = covariance_norm_sweep(zero_profile, noise, 0.5, [0.2, 0.1, 0.05])

    assert sweep.slope == pytest.approx(-0.5, abs=1e-3)
    assert not sweep.decreasing
    assert len(sweep.rows()) == 3
    assert {row["k"] for row in sweep.block_rows()} == {1}


def test_upper_bound_dominates_block(zero_profile):
    """Test the semigroup bound sits above the computed block norm."""
    noise = NoiseSpectrum.explicit([[1, 0, 1.0]], K=1, J=1)
    nu, a = 0.1, 1.0

    bound = covariance_upper_bound(zero_profile, noise, nu, a)
    block = covariance_block(zero_profile, noise, nu, a, 1)

    assert bound >= block.norm()
    assert bound == pytest.approx(2.0 * block.norm(), rel=0.05)
