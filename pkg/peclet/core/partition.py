"""Smooth bump functions and the partition of unity around critical points."""

import logging
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from peclet.core.errors import DegenerateSpacing
from peclet.core.grid import Domain, Grid, RealArray
from peclet.core.profiles import ShearProfile

logger = logging.getLogger(__name__)

ArrayLike = Union[float, RealArray]


def theta(z: ArrayLike) -> RealArray:
    """θ(z) = exp(−1/z) for z > 0, else 0."""
    z = np.asarray(z, dtype=np.float64)
    positive = z > 0.0
    safe = np.where(positive, z, 1.0)
    return np.where(positive, np.exp(-1.0 / safe), 0.0)


def psi(z: ArrayLike) -> RealArray:
    """Smooth step from 0 (z ≤ 0) to 1 (z ≥ 1)."""
    z = np.asarray(z, dtype=np.float64)
    left = theta(z)
    return left / (left + theta(1.0 - z))


def phi(z: ArrayLike) -> RealArray:
    """Plateau bump: 1 on |z| ≤ 1, 0 on |z| ≥ 2."""
    z = np.asarray(z, dtype=np.float64)
    return psi(z + 2.0) * psi(2.0 - z)


def evaluate_bumps(z: ArrayLike) -> tuple[RealArray, RealArray, RealArray]:
    return theta(z), psi(z), phi(z)


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    """Bumps φ_j grouped by vanishing order, plus channel wall bumps.

    ``centers`` maps each order j ≥ 1 to the critical points of that order.
    Sampled arrays live on ``grid``; :meth:`at` evaluates anywhere.
    """

    domain: Domain
    delta: float
    centers: dict[int, tuple[float, ...]]
    grid: Grid = field(repr=False)
    phi0: RealArray = field(repr=False)
    phi_orders: dict[int, RealArray] = field(repr=False)
    phi_walls: tuple[RealArray, ...] = field(repr=False, default=())

    @property
    def orders(self) -> list[int]:
        return sorted(self.phi_orders)

    def order_bump(self, order: int, y: ArrayLike) -> RealArray:
        y = np.asarray(y, dtype=np.float64)
        total = np.zeros_like(y)
        for center in self.centers.get(order, ()):
            total = total + phi(_offset(self.domain, y, center) / self.delta)
        return total

    def wall_bumps(self, y: ArrayLike) -> tuple[RealArray, ...]:
        if self.domain is not Domain.CHANNEL:
            return ()
        y = np.asarray(y, dtype=np.float64)
        return phi(y / self.delta), phi((y - 1.0) / self.delta)

    def at(self, y: ArrayLike) -> tuple[RealArray, dict[int, RealArray], tuple[RealArray, ...]]:
        """(φ₀, {j: φ_j}, wall bumps) at arbitrary points."""
        y = np.asarray(y, dtype=np.float64)
        orders = {j: self.order_bump(j, y) for j in self.centers}
        walls = self.wall_bumps(y)
        rest = np.ones_like(y)
        for values in orders.values():
            rest = rest - values
        for values in walls:
            rest = rest - values
        return rest, orders, walls

    def total(self) -> RealArray:
        total = self.phi0.copy()
        for values in self.phi_orders.values():
            total = total + values
        for values in self.phi_walls:
            total = total + values
        return total

    def localize(self, f: RealArray) -> dict[int, RealArray]:
        """f·√φ_j for every order, with j = 0 the region away from critical points and walls.

        On the channel the remaining energy sits in :meth:`wall_pieces`.
        """
        pieces = {0: f * np.sqrt(np.clip(self.phi0, 0.0, None))}
        for order, values in self.phi_orders.items():
            pieces[order] = f * np.sqrt(values)
        return pieces

    def wall_pieces(self, f: RealArray) -> tuple[RealArray, ...]:
        """f·√φ_b, f·√φ_t on the channel; empty on the torus."""
        return tuple(f * np.sqrt(values) for values in self.phi_walls)


def _offset(domain: Domain, y: RealArray, center: float) -> RealArray:
    d = y - center
    if domain is Domain.TORUS:
        d = np.mod(d + np.pi, 2.0 * np.pi) - np.pi
    return d


def partition_width(profile: ShearProfile) -> float:
    """δ: an eighth of the closest spacing between critical points (and walls)."""
    locations = [cp.location for cp in profile.critical_points]
    candidates: list[float] = []
    for i, a in enumerate(locations):
        for b in locations[i + 1 :]:
            gap = abs(a - b)
            if profile.domain is Domain.TORUS:
                gap = min(gap, 2.0 * np.pi - gap)
            candidates.append(gap / 8.0)
    if profile.domain is Domain.CHANNEL:
        candidates.append(1.0 / 8.0)
        for a in locations:
            candidates.extend([abs(a) / 8.0, abs(a - 1.0) / 8.0])
    if not candidates:
        # a lone critical point on the torus is impossible for smooth u
        candidates.append(np.pi / 8.0)
    return float(min(candidates))


def build_partition(profile: ShearProfile, grid: Union[Grid, None] = None) -> PartitionOfUnity:
    """Construct the partition of unity for ``profile`` sampled on ``grid``."""
    grid = grid or profile.grid
    if profile.domain is Domain.TORUS and not profile.critical_points:
        raise ValueError(f"Profile '{profile.name}' has no critical points to partition")

    delta = partition_width(profile)
    if delta < 4.0 * grid.h * (1.0 - 1e-9):
        raise DegenerateSpacing(delta, grid.h)

    centers: dict[int, list[float]] = {}
    for cp in profile.critical_points:
        centers.setdefault(cp.order, []).append(cp.location)

    partition = PartitionOfUnity(
        domain=profile.domain,
        delta=delta,
        centers={j: tuple(locs) for j, locs in sorted(centers.items())},
        grid=grid,
        phi0=np.zeros(grid.n),
        phi_orders={},
    )
    phi0, orders, walls = partition.at(grid.nodes)
    logger.debug("Partition delta=%.6g orders=%s", delta, sorted(orders))
    return PartitionOfUnity(
        domain=partition.domain,
        delta=delta,
        centers=partition.centers,
        grid=grid,
        phi0=phi0,
        phi_orders=orders,
        phi_walls=walls,
    )


def measure_c_varsigma(partition: PartitionOfUnity, varsigma: float = 0.5) -> float:
    """Largest |φ′|/φ^{1−ς} over all bumps, on a grid 8× finer than the partition's.

    φ′ is a symmetric difference of the closed-form bumps with step 1e-6·δ.
    """
    fine = Grid.build(partition.domain, 8 * partition.grid.n)
    step = 1e-6 * partition.delta
    values = _bump_list(partition, fine.nodes)
    plus = _bump_list(partition, fine.nodes + step)
    minus = _bump_list(partition, fine.nodes - step)
    worst = 0.0
    for mid, right, left in zip(values, plus, minus):
        mask = mid > 1e-300
        if not np.any(mask):
            continue
        derivative = (right[mask] - left[mask]) / (2.0 * step)
        ratio = np.abs(derivative) / np.power(mid[mask], 1.0 - varsigma)
        worst = max(worst, float(np.max(ratio)))
    return worst


def _bump_list(partition: PartitionOfUnity, y: RealArray) -> list[RealArray]:
    phi0, orders, walls = partition.at(y)
    return [phi0, *orders.values(), *walls]
