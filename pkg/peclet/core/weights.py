"""Hypocoercivity weights α, β, γ built on the partition of unity."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from peclet.core.errors import ConstraintViolated
from peclet.core.grid import Domain, Grid, RealArray
from peclet.core.partition import PartitionOfUnity, build_partition
from peclet.core.profiles import ProfileSamples, ShearProfile

logger = logging.getLogger(__name__)

DEFAULT_EPS_TILDE = 1e-1
DEFAULT_C0 = 4.0
DEFAULT_KAPPA0 = 1e-2

LADDERS = ("calibrated", "asymptotic")
DEFAULT_LADDER = "calibrated"
# ν/|k| at which the calibrated pieces of α, β, γ coincide
DEFAULT_KAPPA_CAL = 1.5e-4
DEFAULT_EPS_BETA = 1e-5
# ε_γ,0 / (ε̃ ε_β,0)
GAMMA_RATIO = 30.0

# constraints that make the weights unusable; the rest are reported only
FATAL_CHECKS = ("kappa0", "eps_beta_small", "ledger", "err7_ledger", "pointwise")


def alpha_scalar(nu: float, k: float, j: int) -> float:
    return float((nu / abs(k)) ** (2.0 / (j + 3)))


def beta_scalar(nu: float, k: float, j: int) -> float:
    return float(nu ** ((1.0 - j) / (j + 3)) * abs(k) ** (-4.0 / (j + 3)))


def gamma_scalar(nu: float, k: float, j: int) -> float:
    return float(nu ** (-2.0 * j / (j + 3)) * abs(k) ** (-6.0 / (j + 3)))


def lambda_tilde(nu: float, k: float, n: int) -> float:
    """Enhanced-dissipation rate ν^{(n+1)/(n+3)} |k|^{2/(n+3)}."""
    return float(nu ** ((n + 1.0) / (n + 3.0)) * abs(k) ** (2.0 / (n + 3.0)))


def log_correction(nu: float, k: float) -> float:
    return float((1.0 + np.log(abs(k)) + np.log(1.0 / nu)) ** 2)


def lambda_log(nu: float, k: float, n: int) -> float:
    """λ̃ divided by the (1 + log|k| + log ν⁻¹)² factor."""
    return lambda_tilde(nu, k, n) / log_correction(nu, k)


def default_eps_beta(eps_tilde: float, c0: float, order: int) -> float:
    """Largest ε_β,j of the asymptotic ladder meeting ε_β² ≤ ε_α ε_γ/(4C₀) with a factor-2 margin."""
    return float((eps_tilde**2 / (8.0 * c0)) ** (order + 1))


def ladder_exponents(order: int) -> tuple[float, float, float]:
    """Powers p with α_j/α_0, β_j/β_0, γ_j/γ_0 = (ν/|k|)^{−p}."""
    j = float(order)
    return 2.0 * j / (3.0 * (j + 3.0)), 4.0 * j / (3.0 * (j + 3.0)), 2.0 * j / (j + 3.0)


def alpha_ratio(c0: float) -> float:
    """ε_α,0 / (ε̃ ε_β,0): the ledger holds with a factor 2 at the default ε̃."""
    return 8.0 * c0 / (DEFAULT_EPS_TILDE**2 * GAMMA_RATIO)


def calibrated_ladder(
    eps_beta: dict[int, float], eps_tilde: float, c0: float, kappa_cal: float
) -> tuple[dict[int, float], dict[int, float]]:
    """ε_α,j and ε_γ,j for which ε_·,j·(scalar)_j agrees across j at ν/|k| = κ_cal.

    Away from κ_cal the pieces separate like powers of (ν/|k|)/κ_cal, which
    keeps the weight derivatives in the partition transitions small.
    """
    eps_a: dict[int, float] = {}
    eps_g: dict[int, float] = {}
    for j, eb in eps_beta.items():
        pa, pb, pg = ladder_exponents(j)
        eps_a[j] = eps_tilde * alpha_ratio(c0) * eb * kappa_cal ** (pa - pb)
        eps_g[j] = eps_tilde * GAMMA_RATIO * eb * kappa_cal ** (pg - pb)
    return eps_a, eps_g


@dataclass(frozen=True)
class ConstraintCheck:
    """One line of the weight validation report."""

    name: str
    margin: float

    @property
    def ok(self) -> bool:
        return self.margin >= 0.0


@dataclass(frozen=True, eq=False)
class HypoWeights:
    """Sampled weights and the parameter ledger they were built from."""

    nu: float
    k: float
    top_order: int
    c0: float
    kappa0: float
    eps_tilde: float
    ladder: str
    kappa_cal: float
    eps_alpha: dict[int, float]
    eps_beta: dict[int, float]
    eps_gamma: dict[int, float]
    alpha_j: dict[int, float]
    beta_j: dict[int, float]
    gamma_j: dict[int, float]
    lambda_tilde: float
    lambda_log: float
    partition: PartitionOfUnity = field(repr=False)
    grid: Grid = field(repr=False)
    samples: ProfileSamples = field(repr=False)
    alpha: RealArray = field(repr=False)
    beta: RealArray = field(repr=False)
    gamma: RealArray = field(repr=False)
    alpha_p: RealArray = field(repr=False)
    beta_p: RealArray = field(repr=False)
    beta_pp: RealArray = field(repr=False)
    gamma_p: RealArray = field(repr=False)
    beta_walls: tuple[float, float] = (0.0, 0.0)
    report: tuple[ConstraintCheck, ...] = ()
    constant: bool = False

    @property
    def domain(self) -> Domain:
        return self.grid.domain

    def at(self, y: Union[float, RealArray]) -> tuple[RealArray, RealArray, RealArray]:
        """(α, β, γ) at arbitrary points of the domain."""
        y = np.asarray(y, dtype=np.float64)
        phi0, orders, walls = self.partition.at(y)
        pieces = {0: phi0, **orders}
        alpha = np.zeros_like(y)
        beta = np.zeros_like(y)
        gamma = np.zeros_like(y)
        for j, bump in pieces.items():
            alpha = alpha + self.eps_alpha[j] * self.alpha_j[j] * bump
            beta = beta + self.eps_beta[j] * self.beta_j[j] * bump
            gamma = gamma + self.eps_gamma[j] * self.gamma_j[j] * bump
        if walls:
            bottom, top = walls
            factor = y**2 * bottom + (1.0 - y) ** 2 * top
            alpha = alpha + self.eps_alpha[1] * self.alpha_j[1] * factor
            beta = beta + self.eps_beta[1] * self.beta_j[1] * factor
            gamma = gamma + self.eps_gamma[1] * self.gamma_j[1] * factor
        return alpha, beta, gamma

    def failed(self) -> list[ConstraintCheck]:
        return [check for check in self.report if not check.ok]

    def report_dict(self) -> dict[str, float]:
        return {check.name: check.margin for check in self.report}

    def override(
        self,
        alpha: Optional[float] = None,
        beta: Optional[float] = None,
        gamma: Optional[float] = None,
    ) -> "HypoWeights":
        """Replace weights by constants (derivatives become zero)."""
        zeros = np.zeros(self.grid.n)
        changes: dict[str, object] = {"constant": True}
        if alpha is not None:
            changes.update(alpha=np.full(self.grid.n, alpha), alpha_p=zeros)
        if beta is not None:
            changes.update(
                beta=np.full(self.grid.n, beta),
                beta_p=zeros,
                beta_pp=zeros,
                beta_walls=(beta, beta),
            )
        if gamma is not None:
            changes.update(gamma=np.full(self.grid.n, gamma), gamma_p=zeros)
        return replace(self, **changes)  # type: ignore[arg-type]


def _eps_list(
    values: Optional[Sequence[float]],
    eps_tilde: float,
    c0: float,
    top: int,
    ladder: str,
    kappa_cal: float,
) -> dict[int, float]:
    if values:
        values = [float(v) for v in values]
        return {j: values[min(j, len(values) - 1)] for j in range(top + 1)}
    if ladder == "asymptotic":
        return {j: default_eps_beta(eps_tilde, c0, j) for j in range(top + 1)}
    return {j: DEFAULT_EPS_BETA * kappa_cal ** ladder_exponents(j)[1] for j in range(top + 1)}


def _derivatives(
    weights: HypoWeights, y: RealArray
) -> tuple[RealArray, RealArray, RealArray, RealArray]:
    """α′, β′, β″, γ′ by central differences of the closed-form weights."""
    step = 1e-3 * weights.partition.delta
    a_plus, b_plus, g_plus = weights.at(y + step)
    a_minus, b_minus, g_minus = weights.at(y - step)
    wide = 1e-2 * weights.partition.delta
    _, b_wide_plus, _ = weights.at(y + wide)
    _, b_mid, _ = weights.at(y)
    _, b_wide_minus, _ = weights.at(y - wide)
    return (
        (a_plus - a_minus) / (2.0 * step),
        (b_plus - b_minus) / (2.0 * step),
        (b_wide_plus - 2.0 * b_mid + b_wide_minus) / wide**2,
        (g_plus - g_minus) / (2.0 * step),
    )


def _validate(weights: HypoWeights) -> tuple[ConstraintCheck, ...]:
    nu, k = weights.nu, weights.k
    checks = [ConstraintCheck("kappa0", 1.0 - (nu / abs(k)) / weights.kappa0)]
    for j in range(weights.top_order + 1):
        a, b, g = weights.alpha_j[j], weights.beta_j[j], weights.gamma_j[j]
        checks.append(ConstraintCheck(f"scalar_identity[{j}]", 1e-12 - abs(b * b - a * g) / (b * b)))
        eb, ea, eg = weights.eps_beta[j], weights.eps_alpha[j], weights.eps_gamma[j]
        checks.append(ConstraintCheck(f"eps_beta_small[{j}]", 1.0 - eb))
        checks.append(ConstraintCheck(f"ledger[{j}]", 1.0 - 4.0 * weights.c0 * eb * eb / (ea * eg)))
        checks.append(ConstraintCheck(f"err7_ledger[{j}]", 1.0 - 196.0 * ea * ea / eb))

    alpha, beta, gamma = weights.alpha, weights.beta, weights.gamma
    product = alpha * gamma
    positive = product > 0.0
    pointwise = 1.0
    if np.any(positive):
        pointwise = float(np.min(1.0 - 2.0 * weights.c0 * beta[positive] ** 2 / product[positive]))
    if np.any(~positive & (np.abs(beta) > 0.0)):
        pointwise = min(pointwise, -1.0)
    checks.append(ConstraintCheck("pointwise", pointwise))

    if weights.top_order >= 1:
        ladder = min(
            min(
                weights.alpha_j[j + 1] / weights.alpha_j[j],
                weights.beta_j[j + 1] / weights.beta_j[j],
                weights.gamma_j[j + 1] / weights.gamma_j[j],
            )
            - 1.0
            for j in range(weights.top_order)
        )
        checks.append(ConstraintCheck("ladder", float(ladder)))

    lt = weights.lambda_tilde
    checks.append(ConstraintCheck("lambda_alpha", float(1.0 - lt * np.max(alpha) / nu)))
    ratio = max(weights.eps_gamma[j] / weights.eps_beta[j] for j in weights.eps_beta)
    mask = beta > 0.0
    lambda_gamma = 1.0
    if np.any(mask):
        lambda_gamma = float(np.min(1.0 - lt * gamma[mask] / (ratio * beta[mask])))
    checks.append(ConstraintCheck("lambda_gamma", lambda_gamma))
    return tuple(checks)


def build_weights(
    profile: ShearProfile,
    nu: float,
    k: float,
    eps_tilde: float = DEFAULT_EPS_TILDE,
    eps_beta: Optional[Sequence[float]] = None,
    c0: float = DEFAULT_C0,
    kappa0: float = DEFAULT_KAPPA0,
    ladder: str = DEFAULT_LADDER,
    kappa_cal: float = DEFAULT_KAPPA_CAL,
    grid: Optional[Grid] = None,
    partition: Optional[PartitionOfUnity] = None,
    strict: bool = True,
) -> HypoWeights:
    """Assemble α, β, γ for mode ``k`` and validate the constraint ledger.

    ``ladder`` picks the ε-ledger: "calibrated" (default, see
    :func:`calibrated_ladder`) or "asymptotic" with ε_α = ε̃ε_β and
    ε_γ = ε̃ε_β^{j/(j+1)}. An explicit ``eps_beta`` list replaces the
    ε_β,j of either ladder.

    With ``strict`` the first failing fatal constraint raises
    :class:`ConstraintViolated`; otherwise the failures stay in ``report``.
    """
    if nu <= 0.0 or k == 0:
        raise ValueError("Weights need nu > 0 and k != 0")
    if ladder not in LADDERS:
        raise ValueError(f"Unknown ladder '{ladder}' (known: {', '.join(LADDERS)})")
    grid = grid or profile.grid
    partition = partition or build_partition(profile, grid)
    top = profile.nc if profile.domain is Domain.CHANNEL else profile.n0

    eps_b = _eps_list(eps_beta, eps_tilde, c0, top, ladder, kappa_cal)
    if ladder == "asymptotic":
        eps_a = {j: eps_tilde * eps_b[j] for j in eps_b}
        eps_g = {j: eps_tilde * eps_b[j] ** (j / (j + 1.0)) for j in eps_b}
    else:
        eps_a, eps_g = calibrated_ladder(eps_b, eps_tilde, c0, kappa_cal)

    zeros = np.zeros(grid.n)
    weights = HypoWeights(
        nu=nu,
        k=k,
        top_order=top,
        c0=c0,
        kappa0=kappa0,
        eps_tilde=eps_tilde,
        ladder=ladder,
        kappa_cal=kappa_cal,
        eps_alpha=eps_a,
        eps_beta=eps_b,
        eps_gamma=eps_g,
        alpha_j={j: alpha_scalar(nu, k, j) for j in eps_b},
        beta_j={j: beta_scalar(nu, k, j) for j in eps_b},
        gamma_j={j: gamma_scalar(nu, k, j) for j in eps_b},
        lambda_tilde=lambda_tilde(nu, k, top),
        lambda_log=lambda_log(nu, k, top),
        partition=partition,
        grid=grid,
        samples=profile.sample(grid),
        alpha=zeros,
        beta=zeros,
        gamma=zeros,
        alpha_p=zeros,
        beta_p=zeros,
        beta_pp=zeros,
        gamma_p=zeros,
    )
    alpha, beta, gamma = weights.at(grid.nodes)
    alpha_p, beta_p, beta_pp, gamma_p = _derivatives(weights, grid.nodes)
    walls = (0.0, 0.0)
    if profile.domain is Domain.CHANNEL:
        _, wall_beta, _ = weights.at(np.array([0.0, 1.0]))
        walls = (float(wall_beta[0]), float(wall_beta[1]))
    weights = replace(
        weights,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        alpha_p=alpha_p,
        beta_p=beta_p,
        beta_pp=beta_pp,
        gamma_p=gamma_p,
        beta_walls=walls,
    )
    weights = replace(weights, report=_validate(weights))

    for check in weights.failed():
        logger.info("Weight constraint %s fails with margin %.3g", check.name, check.margin)
        if strict and check.name.split("[")[0] in FATAL_CHECKS:
            raise ConstraintViolated(check.name, check.margin)
    return weights
