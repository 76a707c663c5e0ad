"""Shear profiles u(y) with derivative evaluators and critical-point analysis."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, Callable, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from peclet.core.errors import NoFiniteOrder, NonSmooth
from peclet.core.grid import Domain, Grid, RealArray

logger = logging.getLogger(__name__)

REFINEMENT = 16
ROOT_TOL = 1e-12
ORDER_THRESHOLD = 1e-6
MAX_ORDER = 5
MEAN_TOL = 1e-10

BUILTIN_DOMAINS: dict[str, Domain] = {
    "sin": Domain.TORUS,
    "cos": Domain.TORUS,
    "sin3": Domain.TORUS,
    "trig": Domain.TORUS,
    "couette": Domain.CHANNEL,
    "parabola": Domain.CHANNEL,
    "poly": Domain.CHANNEL,
}


@dataclass(frozen=True, eq=False)
class ProfileSeries:
    """Closed-form shear: a trigonometric sum (torus) or a polynomial (channel).

    Trigonometric form: u(y) = Σ_m a_m cos(m y) + b_m sin(m y), m ≥ 1.
    Polynomial form: u(y) = Σ_i c_i y^i.
    """

    kind: str
    cos_coeffs: tuple[float, ...] = ()
    sin_coeffs: tuple[float, ...] = ()
    poly_coeffs: tuple[float, ...] = ()

    def derivative(self, order: int, y: Union[float, RealArray]) -> RealArray:
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "poly":
            poly = Polynomial(self.poly_coeffs or (0.0,))
            return np.asarray(poly.deriv(order)(y) if order else poly(y), dtype=np.float64)

        result = np.zeros_like(y)
        for m, (a, b) in enumerate(zip(self.cos_coeffs, self.sin_coeffs), start=1):
            if a == 0.0 and b == 0.0:
                continue
            amplitude = (a - 1j * b) * (1j * m) ** order
            result = result + np.real(amplitude * np.exp(1j * m * y))
        return result

    def is_zero(self) -> bool:
        coeffs = self.poly_coeffs if self.kind == "poly" else self.cos_coeffs + self.sin_coeffs
        return not any(coeffs)


def _trig(pairs: Sequence[Sequence[float]]) -> ProfileSeries:
    cos_coeffs = tuple(float(p[0]) for p in pairs)
    sin_coeffs = tuple(float(p[1]) for p in pairs)
    return ProfileSeries(kind="trig", cos_coeffs=cos_coeffs, sin_coeffs=sin_coeffs)


def _mean_free_poly(coeffs: Sequence[float]) -> ProfileSeries:
    poly = Polynomial([float(c) for c in coeffs] or [0.0])
    mean = float(poly.integ()(1.0) - poly.integ()(0.0))
    shifted = poly - mean
    return ProfileSeries(kind="poly", poly_coeffs=tuple(float(c) for c in shifted.coef))


@dataclass(frozen=True)
class CriticalPoint:
    """A zero of u′ and the order to which u′ vanishes there."""

    location: float
    order: int


@dataclass(frozen=True, eq=False)
class ProfileSamples:
    """u and its first three derivatives on a grid."""

    u: RealArray
    du: RealArray
    d2u: RealArray
    d3u: RealArray


@dataclass(frozen=True, eq=False)
class ShearProfile:
    """A sampled shear flow together with its critical-point structure."""

    name: str
    domain: Domain
    series: ProfileSeries = field(repr=False)
    grid: Grid = field(repr=False)
    samples: ProfileSamples = field(repr=False)
    critical_points: tuple[CriticalPoint, ...]
    n0: int
    nc: int
    mean_zero: bool

    def derivative(self, order: int, y: Union[float, RealArray]) -> RealArray:
        return self.series.derivative(order, y)

    def sample(self, grid: Grid) -> ProfileSamples:
        """Evaluate u, u′, u″, u‴ on ``grid``."""
        if grid.domain is not self.domain:
            raise ValueError(
                f"Grid domain {grid.domain.value} does not match profile "
                f"domain {self.domain.value}"
            )
        if grid.matches(self.grid):
            return self.samples
        return _sample(self.series, grid)

    @property
    def is_trivial(self) -> bool:
        return self.series.is_zero()

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self._fine(0)))) if not self.is_trivial else 0.0

    @property
    def bounds(self) -> tuple[float, float]:
        values = self._fine(0)
        return float(np.min(values)), float(np.max(values))

    @property
    def oscillation(self) -> float:
        low, high = self.bounds
        return high - low

    def max_abs_derivative(self, order: int) -> float:
        return float(np.max(np.abs(self._fine(order))))

    def orders(self) -> list[int]:
        return sorted({cp.order for cp in self.critical_points})

    def _fine(self, order: int) -> RealArray:
        return self.series.derivative(order, _fine_nodes(self.domain, self.grid.n))


def _sample(series: ProfileSeries, grid: Grid) -> ProfileSamples:
    y = grid.nodes
    return ProfileSamples(
        u=series.derivative(0, y),
        du=series.derivative(1, y),
        d2u=series.derivative(2, y),
        d3u=series.derivative(3, y),
    )


def _fine_nodes(domain: Domain, n: int) -> RealArray:
    count = REFINEMENT * n
    if domain is Domain.TORUS:
        return np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
    return np.linspace(0.0, 1.0, count + 1)


def _resolve_series(
    spec: Union[str, Sequence[Any], Callable[..., Any]], domain: Domain, coeffs: Sequence[Any]
) -> tuple[str, ProfileSeries]:
    if callable(spec):
        raise NonSmooth(
            "Profiles given as bare callables have no derivative evaluators; "
            "use a built-in name or a coefficient list"
        )
    if not isinstance(spec, str):
        coeffs, spec = spec, ("trig" if domain is Domain.TORUS else "poly")

    name = spec.lower()
    if name == "zero":
        series = _trig([]) if domain is Domain.TORUS else _mean_free_poly([0.0])
        return name, series
    if name not in BUILTIN_DOMAINS:
        raise ValueError(f"Unknown shear profile '{spec}'")
    if BUILTIN_DOMAINS[name] is not domain:
        raise ValueError(
            f"Profile '{name}' is defined on the {BUILTIN_DOMAINS[name].value}, "
            f"not the {domain.value}"
        )

    builtins: dict[str, ProfileSeries] = {
        "sin": _trig([(0.0, 1.0)]),
        "cos": _trig([(1.0, 0.0)]),
        "sin3": _trig([(0.0, 0.75), (0.0, 0.0), (0.0, -0.25)]),
        "couette": _mean_free_poly([-0.5, 1.0]),
        "parabola": _mean_free_poly([0.25, -1.0, 1.0]),
    }
    if name in builtins:
        return name, builtins[name]
    if not coeffs:
        raise ValueError(f"Profile '{name}' needs a non-empty coefficient list")
    if name == "trig":
        return name, _trig([tuple(pair) for pair in coeffs])
    return name, _mean_free_poly([float(c) for c in coeffs])


def _wrap(y: float, domain: Domain) -> float:
    return float(np.mod(y, 2.0 * np.pi)) if domain is Domain.TORUS else y


def _refine_flat_root(
    series: ProfileSeries, a: float, b: float, scale: float
) -> Union[float, None]:
    """Locate an even-order zero of u′ through the first sign-changing derivative."""
    for order in range(2, MAX_ORDER + 2):
        fa = float(series.derivative(order, a))
        fb = float(series.derivative(order, b))
        if fa * fb < 0:
            root = brentq(lambda x, p=order: float(series.derivative(p, x)), a, b, xtol=ROOT_TOL)
            if abs(float(series.derivative(1, root))) <= 1e-10 * scale:
                return float(root)
            return None
    return None


def find_critical_points(series: ProfileSeries, domain: Domain, n: int) -> list[float]:
    """Zeros of u′ on a refined grid: sign changes plus flat minima of |u′|."""
    y = _fine_nodes(domain, n)
    du = series.derivative(1, y)
    scale = float(np.max(np.abs(du)))
    if scale == 0.0:
        return []

    def du_at(x: float) -> float:
        return float(series.derivative(1, x))

    periodic = domain is Domain.TORUS
    right = np.append(y[1:], y[0] + 2.0 * np.pi) if periodic else y[1:]
    left = y if periodic else y[:-1]
    fl = du if periodic else du[:-1]
    fr = np.append(du[1:], du[0]) if periodic else du[1:]

    roots: list[float] = []
    for a, b, fa, fb in zip(left, right, fl, fr):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0.0:
            roots.append(float(brentq(du_at, a, b, xtol=ROOT_TOL)))
    if not periodic and du[-1] == 0.0:
        roots.append(float(y[-1]))

    absd = np.abs(du)
    count = len(y)
    indices = range(count) if periodic else range(1, count - 1)
    for i in indices:
        prev, nxt = i - 1, (i + 1) % count
        if not (absd[i] <= absd[prev] and absd[i] <= absd[nxt]):
            continue
        if absd[i] >= 1e-3 * scale or du[prev] * du[nxt] <= 0.0:
            continue
        a = float(y[prev] - (2.0 * np.pi if i == 0 and periodic else 0.0))
        b = float(y[nxt] + (2.0 * np.pi if nxt == 0 and periodic else 0.0))
        root = _refine_flat_root(series, a, b, scale)
        if root is not None:
            roots.append(root)

    spacing = domain.length / (REFINEMENT * n)
    merged: list[float] = []
    for root in sorted(_wrap(r, domain) for r in roots):
        if merged:
            gap = root - merged[-1]
            if gap < 2.0 * spacing:
                continue
        merged.append(root)
    if periodic and len(merged) > 1 and merged[0] + 2.0 * np.pi - merged[-1] < 2.0 * spacing:
        merged.pop()
    return merged


def vanishing_order(series: ProfileSeries, domain: Domain, n: int, location: float) -> int:
    """Smallest m ≥ 1 with |u^(m+1)(ȳ)| above the relative threshold."""
    y = _fine_nodes(domain, n)
    for m in range(1, MAX_ORDER + 1):
        peak = float(np.max(np.abs(series.derivative(m + 1, y))))
        value = abs(float(series.derivative(m + 1, location)))
        if peak > 0.0 and value > ORDER_THRESHOLD * peak:
            return m
    raise NoFiniteOrder(location, MAX_ORDER)


def make_profile(
    spec: Union[str, Sequence[Any], Callable[..., Any]],
    domain: Union[Domain, str],
    grid_size: int,
    coeffs: Sequence[Any] = (),
) -> ShearProfile:
    """Build a mean-free shear profile and analyse its critical points.

    ``spec`` is a built-in name (sin, cos, sin3, couette, parabola, zero) or
    one of the generic names ``trig``/``poly`` together with ``coeffs``; a bare
    coefficient list is accepted as shorthand for the domain's generic form.
    """
    if isinstance(domain, str):
        domain = Domain.parse(domain)
    grid = Grid.build(domain, grid_size)
    name, series = _resolve_series(spec, domain, coeffs)

    samples = _sample(series, grid)
    mean = grid.h * float(np.sum(samples.u)) / domain.length
    if domain is Domain.CHANNEL:
        # midpoint rule on cell centres is second order; use the exact integral
        poly = Polynomial(series.poly_coeffs or (0.0,))
        mean = float(poly.integ()(1.0) - poly.integ()(0.0))
    mean_zero = abs(mean) < MEAN_TOL

    locations = find_critical_points(series, domain, grid_size)
    critical_points = tuple(
        CriticalPoint(location=loc, order=vanishing_order(series, domain, grid_size, loc))
        for loc in locations
    )
    n0 = max((cp.order for cp in critical_points), default=0)
    nc = max(n0, 1) if domain is Domain.CHANNEL else n0
    if domain is Domain.TORUS and n0 == 0 and not series.is_zero():
        logger.warning("Torus profile '%s' reported no critical points", name)

    logger.debug(
        "Profile %s on %s: critical points %s, n0=%d",
        name,
        domain.value,
        [(round(cp.location, 6), cp.order) for cp in critical_points],
        n0,
    )
    return ShearProfile(
        name=name,
        domain=domain,
        series=series,
        grid=grid,
        samples=samples,
        critical_points=critical_points,
        n0=n0,
        nc=nc,
        mean_zero=mean_zero,
    )
