"""Tests for the finite-difference mode operators."""

import math

import numpy as np
import pytest

from peclet.core.discretize import (
    OperatorKind,
    assemble_mode_operator,
    first_derivative_matrix,
    numerical_range_sample,
    refined_grid_size,
    second_derivative_matrix,
)
from peclet.core.grid import Domain, Grid


def test_periodic_second_derivative_symbol():
    """Test D2 e^{iηy} = −(2 − 2cos ηh)/h² e^{iηy} on the torus."""
    grid = Grid.build(Domain.TORUS, 64)
    mode = np.exp(3j * grid.nodes)
    symbol = -(2.0 - 2.0 * math.cos(3.0 * grid.h)) / grid.h**2

    assert np.allclose(second_derivative_matrix(grid) @ mode, symbol * mode)


def test_channel_stencils_respect_no_flux():
    """Test D2 annihilates constants and is symmetric on the channel."""
    grid = Grid.build(Domain.CHANNEL, 64)
    d2 = second_derivative_matrix(grid)
    ones = np.ones(grid.n)

    assert np.allclose(d2 @ ones, 0.0)
    assert abs(d2 - d2.T).max() == 0.0
    assert np.allclose(first_derivative_matrix(grid) @ ones, 0.0)
    # the cosine eigenmodes of the Neumann problem
    cosine = np.cos(math.pi * grid.nodes)
    symbol = -(2.0 - 2.0 * math.cos(math.pi * grid.h)) / grid.h**2
    assert np.allclose(d2 @ cosine, symbol * cosine)


def test_operator_splits_into_hermitian_and_skew(sin_profile):
    """Test A = ν(k² − D2) + iku with the parts of the right symmetry."""
    op = assemble_mode_operator(sin_profile, 1e-3, 2.0)
    hermitian = op.hermitian_part().toarray()
    skew = op.skew_part().toarray()

    assert np.allclose(op.dense(), hermitian + skew)
    assert np.allclose(hermitian, hermitian.conj().T)
    assert np.allclose(skew, -skew.conj().T)
    assert np.linalg.eigvalsh(hermitian).min() >= 1e-3 * 4.0 * (1.0 - 1e-9)
    assert op.sup_u == pytest.approx(1.0, abs=1e-12)


def test_hypoelliptic_operator_drops_k2(sin_profile):
    """Test R = iku − νD2."""
    elliptic = assemble_mode_operator(sin_profile, 0.1, 3.0)
    hypo = assemble_mode_operator(sin_profile, 0.1, 3.0, kind=OperatorKind.HYPOELLIPTIC)

    assert np.allclose(elliptic.dense() - hypo.dense(), 0.1 * 9.0 * np.eye(sin_profile.grid.n))


def test_operator_kind_parse():
    """Test kind names are case-insensitive."""
    assert OperatorKind.parse("Hypoelliptic") is OperatorKind.HYPOELLIPTIC
    with pytest.raises(ValueError, match="Unknown operator kind"):
        OperatorKind.parse("parabolic")


def test_negative_viscosity(sin_profile):
    """Test the operator refuses ν < 0."""
    with pytest.raises(ValueError):
        assemble_mode_operator(sin_profile, -1.0, 1.0)


def test_refined_grid_size():
    """Test the layer-resolution rule."""
    assert refined_grid_size(256, 1e-4, 1.0, 1, Domain.TORUS) == 256
    assert refined_grid_size(256, 1e-12, 1.0, 1, Domain.TORUS) == 8192
    assert refined_grid_size(256, 1e-12, 1.0, 1, Domain.TORUS, auto_refine=False) == 256


def test_numerical_range_in_sector(sin_profile):
    """Test Re⟨Af, f⟩ ≥ νk² and |Im⟨Af, f⟩| ≤ |k|·max|u| on unit states."""
    op = assemble_mode_operator(sin_profile, 1e-2, 2.0)
    sample = numerical_range_sample(op, 16, np.random.default_rng(3))

    assert len(sample.points) == 16
    assert all(z.real >= 0.04 * (1.0 - 1e-9) for z in sample.points)
    assert all(abs(z.imag) <= sample.sector_bound * (1.0 + 1e-9) for z in sample.points)
    assert sample.sector_ratio <= sample.sector_bound / 0.04 * (1.0 + 1e-9)
