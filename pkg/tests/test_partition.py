"""Tests for the partition of unity around critical points."""

import math

import numpy as np
import pytest

from peclet.core.errors import DegenerateSpacing
from peclet.core.partition import build_partition, measure_c_varsigma, phi, psi, theta
from peclet.core.profiles import make_profile


def test_bump_functions():
    """Test the cutoff building blocks."""
    assert theta(-1.0) == 0.0
    assert theta(1.0) == pytest.approx(math.exp(-1.0))
    assert psi(0.0) == 0.0
    assert psi(1.0) == 1.0
    assert psi(0.5) == pytest.approx(0.5)
    assert np.allclose(phi(np.array([0.0, 1.0, -1.0])), 1.0)
    assert np.allclose(phi(np.array([2.0, -2.5, 3.0])), 0.0)


def test_torus_partition_sums_to_one():
    """Test φ₀ + Σφ_j = 1 for u = sin y."""
    profile = make_profile("sin", "torus", 128)
    partition = build_partition(profile)

    assert partition.delta == pytest.approx(math.pi / 8)
    assert partition.orders == [1]
    assert partition.centers[1] == pytest.approx((math.pi / 2, 3 * math.pi / 2))
    assert np.allclose(partition.total(), 1.0)
    assert partition.phi_walls == ()
    assert np.all(partition.phi0 >= -1e-15)


def test_bump_is_one_at_critical_point():
    """Test the order bump equals one on its plateau."""
    profile = make_profile("sin", "torus", 128)
    partition = build_partition(profile)
    phi0, orders, _ = partition.at(np.array([math.pi / 2, 0.0]))

    assert orders[1] == pytest.approx([1.0, 0.0])
    assert phi0 == pytest.approx([0.0, 1.0])


def test_channel_partition_has_wall_bumps(couette_profile):
    """Test the channel partition covers both walls."""
    partition = build_partition(couette_profile)

    assert partition.delta == pytest.approx(1.0 / 8.0)
    assert len(partition.phi_walls) == 2
    assert partition.phi_walls[0][0] == pytest.approx(1.0)
    assert partition.phi_walls[1][-1] == pytest.approx(1.0)
    assert np.allclose(partition.total(), 1.0)


def test_degenerate_spacing():
    """Test close critical points on a coarse grid."""
    profile = make_profile("sin3", "torus", 64)

    with pytest.raises(DegenerateSpacing):
        build_partition(profile)


def test_partition_needs_critical_points(zero_profile):
    """Test the torus partition of a shear without critical points."""
    with pytest.raises(ValueError, match="no critical points"):
        build_partition(zero_profile)


def test_localize_splits_the_energy():
    """Test Σ‖f√φ_j‖² = ‖f‖²."""
    profile = make_profile("sin", "torus", 128)
    partition = build_partition(profile)
    f = np.cos(profile.grid.nodes) + 2.0
    pieces = partition.localize(f)

    assert sum(float(np.sum(p**2)) for p in pieces.values()) == pytest.approx(float(np.sum(f**2)))


def test_c_varsigma_is_finite():
    """Test the bump-derivative constant is positive and finite."""
    partition = build_partition(make_profile("sin", "torus", 128))
    value = measure_c_varsigma(partition)

    assert 0.0 < value < math.inf


def test_channel_wall_pieces_complete_the_split():
    """Test the order pieces and the wall pieces together carry ‖f‖² on the channel."""
    profile = make_profile("couette", "channel", 128)
    partition = build_partition(profile)
    f = np.cos(np.pi * profile.grid.nodes) + 2.0

    pieces = [*partition.localize(f).values(), *partition.wall_pieces(f)]

    assert len(partition.wall_pieces(f)) == 2
    assert sum(float(np.sum(p**2)) for p in pieces) == pytest.approx(float(np.sum(f**2)))
    assert build_partition(make_profile("sin", "torus", 128)).wall_pieces(f) == ()
