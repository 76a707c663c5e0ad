"""The augmented energy Φ, its time-derivative identity and the decay certificate."""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from peclet.core.discretize import (
    BoundaryCondition,
    ModeOperator,
    OperatorKind,
    first_derivative_matrix,
    second_derivative_matrix,
)
from peclet.core.errors import CertificateFailed, GridMismatch, SolveFailure
from peclet.core.grid import ComplexArray, Grid, RealArray
from peclet.core.semigroup import CrankNicolson, default_dt
from peclet.core.weights import HypoWeights

logger = logging.getLogger(__name__)

MONOTONE_RTOL = 1e-8

# terms absent when there is no x-diffusion
HYPOELLIPTIC_DROPPED = ("heat_k2", "alpha_k2", "beta_k3", "gamma_k4")


@dataclass(frozen=True, eq=False)
class StateDerivatives:
    f: ComplexArray
    df: ComplexArray
    d2f: ComplexArray


def state_derivatives(grid: Grid, f: ComplexArray) -> StateDerivatives:
    """∂_y f and ∂_yy f with the operator's own stencils."""
    return StateDerivatives(
        f=f,
        df=np.asarray(first_derivative_matrix(grid) @ f),
        d2f=np.asarray(second_derivative_matrix(grid) @ f),
    )


@dataclass(frozen=True)
class PhiBreakdown:
    """Φ = ‖f‖² + ‖√α∂f‖² + 2kRe⟨iβu′f, ∂f⟩ + k²‖√γu′f‖²."""

    total: float
    mass: float
    alpha_part: float
    cross: float
    gamma_part: float
    derivative_terms: dict[str, float] = field(default_factory=dict)

    @property
    def parts(self) -> tuple[float, float, float, float]:
        return self.mass, self.alpha_part, self.cross, self.gamma_part

    def sandwich(self) -> tuple[float, float]:
        """Lower and upper comparison values ‖f‖² + c(‖√α∂f‖² + k²‖√γu′f‖²), c = ½, 3/2."""
        return (
            self.mass + 0.5 * (self.alpha_part + self.gamma_part),
            self.mass + 1.5 * (self.alpha_part + self.gamma_part),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "mass": self.mass,
            "alpha_part": self.alpha_part,
            "cross": self.cross,
            "gamma_part": self.gamma_part,
            "derivative_terms": dict(self.derivative_terms),
        }


def _check_state(f: ComplexArray, weights: HypoWeights, grid: Optional[Grid]) -> ComplexArray:
    if grid is not None and not grid.matches(weights.grid):
        raise GridMismatch(
            f"State grid ({grid.domain.value}, n={grid.n}) differs from the weights grid "
            f"({weights.grid.domain.value}, n={weights.grid.n})"
        )
    f = np.asarray(f, dtype=np.complex128)
    if f.shape != (weights.grid.n,):
        raise GridMismatch(f"State has {f.shape[0]} points, weights have {weights.grid.n}")
    return f


def phi_value(
    f: ComplexArray,
    weights: HypoWeights,
    k: Optional[float] = None,
    grid: Optional[Grid] = None,
    op: Optional[ModeOperator] = None,
) -> PhiBreakdown:
    """Evaluate Φ part by part; with ``op`` the derivative terms are filled in too."""
    f = _check_state(f, weights, grid)
    k = weights.k if k is None else k
    g = weights.grid
    states = state_derivatives(g, f)
    du = weights.samples.du
    mass = g.norm2(f)
    alpha_part = g.h * float(np.sum(weights.alpha * np.abs(states.df) ** 2))
    cross = 2.0 * k * float(np.real(g.inner(1j * weights.beta * du * f, states.df)))
    gamma_part = k**2 * g.h * float(np.sum(weights.gamma * du**2 * np.abs(f) ** 2))
    terms = derivative_terms(op, weights, f) if op is not None else {}
    return PhiBreakdown(
        total=mass + alpha_part + cross + gamma_part,
        mass=mass,
        alpha_part=alpha_part,
        cross=cross,
        gamma_part=gamma_part,
        derivative_terms=terms,
    )


def phi_matrix(weights: HypoWeights, k: Optional[float] = None) -> sp.csr_matrix:
    """M with Φ = ⟨Mf, f⟩, assembled from the same D1 stencil as phi_value."""
    k = weights.k if k is None else k
    g = weights.grid
    d1 = first_derivative_matrix(g)
    du = weights.samples.du
    twist = sp.diags(1j * weights.beta * du)
    matrix = (
        sp.identity(g.n, dtype=np.complex128)
        + d1.conj().T @ sp.diags(weights.alpha) @ d1
        + k * (d1.conj().T @ twist + twist.conj().T @ d1)
        + k**2 * sp.diags(weights.gamma * du**2)
    )
    return sp.csr_matrix(matrix)


def phi_rate(op: ModeOperator, weights: HypoWeights, f: ComplexArray) -> float:
    """Exact semi-discrete dΦ/dt = −2Re⟨Af, Mf⟩ along ∂_t f = −Af."""
    matrix = phi_matrix(weights, op.k)
    return -2.0 * float(np.real(op.grid.inner(op.apply(f), np.asarray(matrix @ f))))


def derivative_terms(op: ModeOperator, weights: HypoWeights, f: ComplexArray) -> dict[str, float]:
    """The individually named terms of dΦ/dt, evaluated with the grid stencils."""
    g = weights.grid
    nu, k = op.nu, op.k
    s = state_derivatives(g, np.asarray(f, dtype=np.complex128))
    u = weights.samples
    a, ap = weights.alpha, weights.alpha_p
    b, bp, bpp = weights.beta, weights.beta_p, weights.beta_pp
    c, cp = weights.gamma, weights.gamma_p

    def sq(weight: RealArray, v: ComplexArray) -> float:
        return g.h * float(np.sum(weight * np.abs(v) ** 2))

    def re(x: ComplexArray, y: ComplexArray) -> float:
        return float(np.real(g.inner(x, y)))

    terms = {
        "heat_k2": -2.0 * nu * k**2 * g.norm2(s.f),
        "heat_dy": -2.0 * nu * g.norm2(s.df),
        "alpha_k2": -2.0 * nu * k**2 * sq(a, s.df),
        "alpha_dyy": -2.0 * nu * sq(a, s.d2f),
        "alpha_transport": -2.0 * k * re(1j * a * u.du * s.f, s.df),
        "alpha_prime": -2.0 * nu * re(ap * s.df, s.d2f),
        "beta_transport": -2.0 * k**2 * sq(b * u.du**2, s.f),
        "beta_k3": -4.0 * nu * k**3 * re(1j * b * u.du * s.f, s.df),
        "beta_dyy": 4.0 * nu * k * re(1j * b * u.du * s.d2f, s.df),
        "beta_u3": 2.0 * nu * k * re(1j * b * u.d3u * s.f, s.df),
        "beta_prime": 4.0 * nu * k * re(1j * bp * u.d2u * s.f, s.df),
        "beta_pp": 2.0 * nu * k * re(1j * bpp * u.du * s.f, s.df),
        "gamma_k4": -2.0 * nu * k**4 * sq(c * u.du**2, s.f),
        "gamma_dy": -2.0 * nu * k**2 * sq(c * u.du**2, s.df),
        "gamma_u2": -4.0 * nu * k**2 * re(c * u.du * u.d2u * s.f, s.df),
        "gamma_prime": -2.0 * nu * k**2 * re(cp * u.du * s.f, u.du * s.df),
    }
    if op.kind is OperatorKind.HYPOELLIPTIC:
        for name in HYPOELLIPTIC_DROPPED:
            terms.pop(name)
    if op.bc is BoundaryCondition.NO_FLUX:
        terms["boundary"] = boundary_term(op, weights, s)
    return terms


def boundary_term(op: ModeOperator, weights: HypoWeights, states: StateDerivatives) -> float:
    """2νk·Re[iβu′ f ∂_yy f̄] between the walls, with the wall values of β."""
    bottom, top = weights.beta_walls
    du0 = float(op.samples.du[0])
    du1 = float(op.samples.du[-1])
    jump = top * du1 * states.f[-1] * np.conj(states.d2f[-1]) - bottom * du0 * states.f[0] * np.conj(
        states.d2f[0]
    )
    return 2.0 * op.nu * op.k * float(np.real(1j * jump))


@dataclass(frozen=True)
class DerivativeAudit:
    """Finite-difference dΦ/dt against the exact rate and the named-term sum."""

    finite_difference: float
    exact: float
    term_sum: float
    residual: float
    audit_gap: float
    terms: dict[str, float]


def _backward_step(op: ModeOperator, dt: float, f: ComplexArray) -> ComplexArray:
    identity = sp.identity(op.n, dtype=np.complex128, format="csc")
    half = 0.5 * dt * op.matrix
    try:
        back = splu((identity - half).tocsc())
    except RuntimeError as e:
        raise SolveFailure(f"Reverse Crank-Nicolson factorization failed: {e}") from e
    return np.asarray(back.solve(np.asarray((identity + half) @ f)))


def phi_derivative_residual(
    op: ModeOperator, weights: HypoWeights, f: ComplexArray, dt: float
) -> DerivativeAudit:
    """Compare (Φ(f(dt)) − Φ(f(−dt)))/2dt with −2Re⟨Af, Mf⟩ and with the named terms."""
    f = _check_state(f, weights, op.grid)
    forward = CrankNicolson(op, dt).step(f)
    backward = _backward_step(op, dt, f)
    fd = (phi_value(forward, weights, op.k).total - phi_value(backward, weights, op.k).total) / (
        2.0 * dt
    )
    exact = phi_rate(op, weights, f)
    terms = derivative_terms(op, weights, f)
    term_sum = float(sum(terms.values()))
    eps = np.finfo(np.float64).eps
    return DerivativeAudit(
        finite_difference=fd,
        exact=exact,
        term_sum=term_sum,
        residual=abs(fd - exact) / (abs(exact) + eps),
        audit_gap=abs(term_sum - exact) / (abs(exact) + eps),
        terms=terms,
    )


@dataclass(frozen=True, eq=False)
class DecayCertificate:
    eps_measured: float
    monotone: bool
    trajectory_ok: bool
    times: RealArray = field(repr=False)
    phi: RealArray = field(repr=False)
    mass: RealArray = field(repr=False)
    failure_time: Optional[float] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "eps_measured": self.eps_measured,
            "monotone": self.monotone,
            "trajectory_ok": self.trajectory_ok,
            "failure_time": self.failure_time,
            "phi_initial": float(self.phi[0]),
            "phi_final": float(self.phi[-1]),
        }


def certify_decay(
    op: ModeOperator,
    weights: HypoWeights,
    f0: ComplexArray,
    t_final: float,
    dt: Optional[float] = None,
    strict: bool = True,
) -> DecayCertificate:
    """Propagate f0 and check that Φ decays at rate ε̃λ̃ with ε̃ measured.

    A step raising Φ by more than 1e-8 relative raises :class:`CertificateFailed`
    (or, with ``strict=False``, returns a certificate with ``monotone=False``).
    """
    if op.nu / abs(op.k) > weights.kappa0:
        raise ValueError(f"nu/|k| = {op.nu / abs(op.k):.3g} exceeds kappa0 = {weights.kappa0:g}")
    f = _check_state(f0, weights, op.grid)
    dt = dt or default_dt(op)
    steps = max(1, int(math.ceil(t_final / dt - 1e-9)))
    dt = t_final / steps
    stepper = CrankNicolson(op, dt)
    matrix = phi_matrix(weights, op.k)
    g = op.grid

    def phi_of(v: ComplexArray) -> float:
        return float(np.real(g.inner(np.asarray(matrix @ v), v)))

    times = dt * np.arange(steps + 1)
    phi = np.empty(steps + 1)
    mass = np.empty(steps + 1)
    phi[0], mass[0] = phi_of(f), g.norm2(f)
    rate = math.inf
    failure: Optional[float] = None
    for n in range(steps):
        f = stepper.step(f)
        phi[n + 1], mass[n + 1] = phi_of(f), g.norm2(f)
        if phi[n + 1] > phi[n] * (1.0 + MONOTONE_RTOL):
            failure = float(times[n + 1])
            logger.info("Phi increased at t=%.6g (%.12g -> %.12g)", failure, phi[n], phi[n + 1])
            if strict:
                raise CertificateFailed(failure, phi_value(f, weights, op.k, op=op).to_dict())
            phi, mass, times = phi[: n + 2], mass[: n + 2], times[: n + 2]
            break
        if phi[n + 1] > 0.0 and phi[n] > 0.0:
            rate = min(rate, -math.log(phi[n + 1] / phi[n]) / (dt * weights.lambda_tilde))

    eps_measured = rate if math.isfinite(rate) else 0.0
    envelope = phi[0] * np.exp(-eps_measured * weights.lambda_tilde * times)
    trajectory_ok = bool(np.all(mass <= envelope * (1.0 + 1e-10)))
    return DecayCertificate(
        eps_measured=eps_measured,
        monotone=failure is None,
        trajectory_ok=trajectory_ok,
        times=times,
        phi=phi,
        mass=mass,
        failure_time=failure,
    )


@dataclass(frozen=True)
class EquivalenceConstants:
    """Measured c, C with ‖·‖_lower ≤ c(Φ − ‖f‖²) and Φ − ‖f‖² ≤ C‖·‖_upper."""

    lower: float
    upper: float


def equivalence_constants(weights: HypoWeights, states: Sequence[ComplexArray]) -> EquivalenceConstants:
    """Worst ratios between Φ − ‖f‖² and the H¹-type norms over ``states``."""
    nu, k = weights.nu, abs(weights.k)
    g = weights.grid
    d1 = first_derivative_matrix(g)
    du = weights.samples.du
    top = weights.top_order
    lower = 0.0
    upper = 0.0
    for f in states:
        extra = phi_value(f, weights).total - g.norm2(f)
        dy = g.norm2(np.asarray(d1 @ f))
        transport = g.norm2(du * f)
        small = nu ** (2.0 / 3.0) * k ** (-2.0 / 3.0) * dy + transport
        large = dy + (k / nu) ** (2.0 * top / (top + 3.0)) * transport
        if extra > 0.0:
            lower = max(lower, small / extra)
        if large > 0.0:
            upper = max(upper, extra / large)
    return EquivalenceConstants(lower=lower, upper=upper)
