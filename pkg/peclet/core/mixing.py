"""Inviscid shear mixing and the decay of the H⁻¹ norm."""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from peclet.core.discretize import second_derivative_matrix
from peclet.core.errors import ResolutionExceeded
from peclet.core.grid import ComplexArray, Domain, Grid, RealArray
from peclet.core.profiles import ShearProfile

logger = logging.getLogger(__name__)

AVERAGE_SAMPLES = 16
FIT_START = 100.0
MIN_FIT_POINTS = 5


def _require_torus(profile: ShearProfile) -> None:
    if profile.domain is not Domain.TORUS:
        raise ValueError("Mixing is only defined on the torus")


def inviscid_state(
    profile: ShearProfile, k: float, f0: ComplexArray, t: float, grid: Optional[Grid] = None
) -> ComplexArray:
    """g(t) = e^{−iku t}·f0, exact pointwise."""
    _require_torus(profile)
    grid = grid or profile.grid
    u = profile.sample(grid).u
    return np.exp(-1j * k * u * t) * np.asarray(f0, dtype=np.complex128)


def hminus1_norm(v: ComplexArray) -> float:
    """√Σ|v̂_η|²/(1 + η²) with v̂ scaled so that Σ|v̂_η|² = ‖v‖²_{L²}."""
    v = np.asarray(v, dtype=np.complex128)
    n = v.size
    coeffs = math.sqrt(2.0 * math.pi) / n * np.fft.fft(v)
    eta = np.fft.fftfreq(n, 1.0 / n)
    return float(np.sqrt(np.sum(np.abs(coeffs) ** 2 / (1.0 + eta**2))))


def hminus1_oracle(grid: Grid, v: ComplexArray) -> float:
    """⟨(I − D2)⁻¹v, v⟩^{1/2} with the finite-difference D2."""
    system = (sp.identity(grid.n, format="csc") - second_derivative_matrix(grid)).tocsc()
    w = spsolve(system.astype(np.complex128), np.asarray(v, dtype=np.complex128))
    return math.sqrt(max(float(np.real(grid.inner(w, v))), 0.0))


def japanese(x: RealArray) -> RealArray:
    """⟨x⟩ = (1 + x²)^{1/2}."""
    return np.sqrt(1.0 + np.asarray(x, dtype=np.float64) ** 2)


@dataclass(frozen=True, eq=False)
class MixingCurve:
    times: RealArray
    kt: RealArray = field(repr=False)
    hm1_norms: RealArray = field(repr=False)
    l2_norms: RealArray = field(repr=False)
    k: float
    profile: str
    slope: float
    truncated_at: Optional[float] = None

    def rows(self) -> list[dict[str, object]]:
        return [
            {"profile": self.profile, "k": self.k, "t": float(t), "kt": float(kt), "hm1_norm": float(v)}
            for t, kt, v in zip(self.times, self.kt, self.hm1_norms)
        ]


def resolution_limit(profile: ShearProfile, k: float, grid: Grid) -> float:
    """Largest t with |k|·t·max|u′| ≤ n/4 (phase still resolved on the grid)."""
    slope = abs(k) * profile.max_abs_derivative(1)
    return math.inf if slope == 0.0 else grid.n / (4.0 * slope)


def averaged_norm(
    profile: ShearProfile, k: float, f0: ComplexArray, t: float, grid: Grid, samples: int = AVERAGE_SAMPLES
) -> float:
    """H⁻¹ norm with its square averaged over one period of the fastest phase."""
    spread = abs(k) * profile.oscillation
    if spread == 0.0 or samples <= 1:
        return hminus1_norm(inviscid_state(profile, k, f0, t, grid))
    period = 2.0 * math.pi / spread
    values = [
        hminus1_norm(inviscid_state(profile, k, f0, t + period * m / samples, grid)) ** 2
        for m in range(samples)
    ]
    return math.sqrt(float(np.mean(values)))


def mixing_exponent(
    profile: ShearProfile,
    k: float,
    f0: ComplexArray,
    t_grid: Optional[Sequence[float]] = None,
    grid: Optional[Grid] = None,
    fit_start: float = FIT_START,
    average: int = AVERAGE_SAMPLES,
) -> MixingCurve:
    """Sample the H⁻¹ decay and fit its slope against log⟨kt⟩ on the resolved tail.

    Times past the resolution limit are dropped with a warning; too few
    resolved points beyond ``fit_start`` raise :class:`ResolutionExceeded`.
    """
    _require_torus(profile)
    grid = grid or profile.grid
    f0 = np.asarray(f0, dtype=np.complex128)
    limit = resolution_limit(profile, k, grid)
    if t_grid is None:
        top = min(limit, 1e4 / abs(k))
        t_grid = np.geomspace(1e-1 / abs(k), top, 64)
    times = np.asarray(t_grid, dtype=np.float64)

    truncated: Optional[float] = None
    if np.any(times > limit):
        truncated = limit
        logger.warning("Mixing curve for k=%g truncated at t=%.4g (grid resolution)", k, limit)
        times = times[times <= limit]

    kt = japanese(k * times)
    norms = np.array([averaged_norm(profile, k, f0, float(t), grid, average) for t in times])
    l2 = np.array([math.sqrt(grid.norm2(inviscid_state(profile, k, f0, float(t), grid))) for t in times])

    mask = (kt >= fit_start) & (norms > 0.0)
    if int(np.count_nonzero(mask)) < MIN_FIT_POINTS:
        raise ResolutionExceeded(
            f"Only {int(np.count_nonzero(mask))} resolved samples with <kt> >= {fit_start:g}; "
            f"refine the grid (n={grid.n})"
        )
    slope, _ = np.polyfit(np.log(kt[mask]), np.log(norms[mask]), 1)
    logger.debug("Mixing slope for %s, k=%g: %.4f", profile.name, k, slope)
    return MixingCurve(
        times=times,
        kt=kt,
        hm1_norms=norms,
        l2_norms=l2,
        k=k,
        profile=profile.name,
        slope=float(slope),
        truncated_at=truncated,
    )


def collapse_deviation(
    profile: ShearProfile,
    f0: ComplexArray,
    ks: Sequence[float],
    kt_values: Sequence[float],
    grid: Optional[Grid] = None,
) -> float:
    """Largest relative spread of ‖g_k‖_{H⁻¹} across ``ks`` at equal kt."""
    _require_torus(profile)
    grid = grid or profile.grid
    worst = 0.0
    for s in kt_values:
        values = np.array([hminus1_norm(inviscid_state(profile, k, f0, s / k, grid)) for k in ks])
        scale = float(np.max(values))
        if scale > 0.0:
            worst = max(worst, float(np.ptp(values)) / scale)
    return worst
