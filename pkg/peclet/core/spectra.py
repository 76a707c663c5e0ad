"""Resolvent norms on the imaginary axis, the pseudospectral gap and model spectral gaps."""

import logging
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np
import scipy.linalg as la
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import splu

from peclet.core.discretize import ModeOperator, first_derivative_matrix
from peclet.core.errors import SolveFailure, TruncationNotConverged, ZeroInput
from peclet.core.grid import ComplexArray, RealArray
from peclet.core.linalg import DEFAULT_MAX_ITER, DEFAULT_TOL, power_iteration
from peclet.core.partition import PartitionOfUnity
from peclet.core.profiles import ShearProfile
from peclet.core.semigroup import DecayCurve
from peclet.utils.parallel import map_tasks

logger = logging.getLogger(__name__)

SCAN_POINTS = 256
REFINE_PEAKS = 3
SCAN_MARGIN = 0.1
MODEL_POINTS = 2048
MODEL_RTOL = 1e-8
MAX_DOUBLINGS = 8


def resolvent_norm(
    op: ModeOperator,
    lam: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
) -> float:
    """‖(A − iλ)⁻¹‖ by power iteration with one LU of A − iλ."""
    try:
        lu = splu(op.shifted(1j * lam))
    except RuntimeError as e:
        raise SolveFailure(f"Resolvent factorization failed at lambda={lam:.6g}: {e}") from e

    def gram(v: ComplexArray) -> ComplexArray:
        w = lu.solve(lu.solve(v), trans="H")
        if not np.all(np.isfinite(w)):
            raise SolveFailure(f"Non-finite resolvent solve at lambda={lam:.6g}")
        return w

    value = power_iteration(gram, op.n, tol=tol, max_iter=max_iter, seed=seed)
    return math.sqrt(value)


def resolvent_oracle(op: ModeOperator, lam: float) -> float:
    """Dense reciprocal smallest singular value of A − iλ."""
    shifted = op.dense() - 1j * lam * np.eye(op.n)
    return float(1.0 / la.svdvals(shifted)[-1])


def _safe_resolvent(op: ModeOperator, tol: float, scale: float, lam: float) -> float:
    try:
        return resolvent_norm(op, lam, tol=tol)
    except SolveFailure:
        # λ sits on the discrete spectrum; nudge it off
        return resolvent_norm(op, lam + 1e-10 * scale, tol=tol)


def scan_range(op: ModeOperator) -> tuple[float, float]:
    """k·[min u − s, max u + s] with s = 0.1·osc(u) (s = 1 for constant u)."""
    low, high = op.u_bounds
    spread = SCAN_MARGIN * (high - low) or 1.0
    k = op.k or 1.0
    ends = sorted((k * (low - spread), k * (high + spread)))
    return ends[0], ends[1]


@dataclass(frozen=True, eq=False)
class PseudoGap:
    """Ψ = 1/sup_λ ‖(A − iλ)⁻¹‖ with the sampled resolvent profile."""

    psi: float
    argmax_lambda: float
    lambdas: RealArray = field(repr=False)
    resolvent: RealArray = field(repr=False)
    coarse: bool = False

    @property
    def peak(self) -> float:
        return 1.0 / self.psi

    def rows(self, op: ModeOperator) -> list[dict[str, object]]:
        return [
            {
                "profile": op.profile_name,
                "kind": op.kind.value,
                "nu": op.nu,
                "k": op.k,
                "lambda": float(lam),
                "resolvent_norm": float(value),
            }
            for lam, value in zip(self.lambdas, self.resolvent)
        ]


def _local_maxima(values: RealArray, count: int) -> list[int]:
    peaks = [
        i
        for i in range(values.size)
        if (i == 0 or values[i] >= values[i - 1])
        and (i == values.size - 1 or values[i] >= values[i + 1])
    ]
    peaks.sort(key=lambda i: values[i], reverse=True)
    return peaks[:count]


def pseudo_gap(
    op: ModeOperator,
    points: int = SCAN_POINTS,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> PseudoGap:
    """Coarse λ-scan then golden-section refinement of the top peaks."""
    low, high = scan_range(op)
    lambdas = np.linspace(low, high, points)
    scale = max(abs(low), abs(high), 1.0)
    evaluate = partial(_safe_resolvent, op, tol, scale)
    values = np.array(map_tasks(evaluate, [float(lam) for lam in lambdas], workers))
    cell = lambdas[1] - lambdas[0]

    best_lambda = float(lambdas[int(np.argmax(values))])
    best_value = float(np.max(values))
    coarse_lambda = best_lambda
    for i in _local_maxima(values, REFINE_PEAKS):
        a = float(lambdas[max(i - 1, 0)])
        b = float(lambdas[i])
        c = float(lambdas[min(i + 1, points - 1)])

        def objective(lam: float) -> float:
            return -evaluate(float(lam))

        try:
            if not a < b < c:
                raise ValueError("peak at scan boundary")
            result = minimize_scalar(objective, bracket=(a, b, c), method="golden")
        except ValueError:
            result = minimize_scalar(objective, bounds=(a, c), method="bounded")
        if -result.fun > best_value:
            best_value = float(-result.fun)
            best_lambda = float(result.x)

    coarse = abs(best_lambda - coarse_lambda) > cell
    if coarse:
        logger.warning(
            "ScanTooCoarse: refined argmax %.6g moved more than one cell from %.6g",
            best_lambda,
            coarse_lambda,
        )
    jumps = np.abs(np.diff(values)) / np.maximum(values[:-1], values[1:])
    if np.any(jumps > 0.5):
        logger.warning("Resolvent profile jumps by more than 50%% between scan points")
    logger.debug("Psi=%.6g at lambda=%.6g (nu=%.3g k=%g)", 1.0 / best_value, best_lambda, op.nu, op.k)
    return PseudoGap(
        psi=1.0 / best_value,
        argmax_lambda=best_lambda,
        lambdas=lambdas,
        resolvent=values,
        coarse=coarse,
    )


def resolvent_integral_bound(curve: DecayCurve) -> float:
    """∫‖e^{−tA}‖dt by the trapezoid rule plus an exponential tail."""
    integral = float(trapezoid(curve.norms, curve.times))
    t, norms = curve.times, curve.norms
    if norms.size >= 2 and 0.0 < norms[-1] < norms[-2]:
        rate = math.log(norms[-2] / norms[-1]) / (t[-1] - t[-2])
        integral += float(norms[-1]) / rate
    elif norms[-1] > 0.0:
        logger.warning("Decay curve has not started decaying; integral bound is truncated")
    return integral


def _model_matrix(
    j: int, c: float, sigma: float, length: float, n: int, half_line: bool
) -> tuple[RealArray, RealArray]:
    if half_line:
        h = length / n
        z = h * (np.arange(n) + 0.5)
        diag = np.full(n, 2.0 * sigma / h**2)
        diag[0] = sigma / h**2
        diag[-1] = 3.0 * sigma / h**2
    else:
        h = 2.0 * length / (n + 1)
        z = -length + h * np.arange(1, n + 1)
        diag = np.full(n, 2.0 * sigma / h**2)
    diag = diag + c**2 * z ** (2 * j)
    off = np.full(n - 1, -sigma / h**2)
    return diag, off


def schrodinger_ground_energy(
    j: int,
    c: float,
    sigma: float,
    n: int = MODEL_POINTS,
    half_line: bool = False,
    rtol: float = MODEL_RTOL,
) -> tuple[float, float]:
    """Lowest eigenvalue of −σ∂zz + c²z^{2j} and its rescaled value b/σ^{j/(j+1)}.

    The line is cut at |z| ≤ 8(σ/c²)^{1/(2j+2)} with Dirichlet ends; the cut
    and the point count double together until the eigenvalue settles.
    ``half_line`` puts a no-flux wall at z = 0.
    """
    if j < 1 or c <= 0.0 or sigma <= 0.0:
        raise ValueError("Model operator needs j >= 1, c > 0 and sigma > 0")
    length = 8.0 * (sigma / c**2) ** (1.0 / (2 * j + 2))
    previous = math.nan
    for _ in range(MAX_DOUBLINGS):
        diag, off = _model_matrix(j, c, sigma, length, n, half_line)
        energy = float(la.eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, 0))[0])
        if abs(energy - previous) <= rtol * abs(energy):
            return energy, energy / sigma ** (j / (j + 1.0))
        previous = energy
        length *= 2.0
        n *= 2
    raise TruncationNotConverged(
        f"Ground energy for j={j}, sigma={sigma:g} still moving after {MAX_DOUBLINGS} doublings"
    )


@dataclass(frozen=True)
class GapMargin:
    """Localized spectral-gap ratios; ``margin`` is the minimum over pieces."""

    margin: float
    pieces: dict[str, float]
    global_margin: float


def _gap_ratio(
    sigma: float, exponent: float, piece: ComplexArray, derivative: ComplexArray, du: RealArray, h: float
) -> float:
    mass = h * float(np.sum(np.abs(piece) ** 2))
    rhs = sigma * h * float(np.sum(np.abs(derivative) ** 2)) + h * float(np.sum(np.abs(du * piece) ** 2))
    return rhs / (sigma**exponent * mass)


def localized_gap_margin(
    profile: ShearProfile,
    partition: PartitionOfUnity,
    sigma: float,
    f: ComplexArray,
) -> GapMargin:
    """(σ‖∂_y f_j‖² + ‖u′f_j‖²)/(σ^{j/(j+1)}‖f_j‖²) for each localized piece f_j = f√φ_j.

    Wall pieces of the channel use the half-line exponent 1/2. The global
    ratio uses the whole f with exponent n0/(n0+1).
    """
    grid = partition.grid
    f = np.asarray(f, dtype=np.complex128)
    if f.shape != (grid.n,):
        raise ValueError(f"State has shape {f.shape}, partition grid has {grid.n} points")
    du = profile.sample(grid).du
    d1 = first_derivative_matrix(grid)

    weighted: list[tuple[str, float, ComplexArray]] = [
        ("0", 0.0, f * np.sqrt(np.clip(partition.phi0, 0.0, None)))
    ]
    for order, bump in partition.phi_orders.items():
        weighted.append((str(order), order / (order + 1.0), f * np.sqrt(bump)))
    for i, piece in enumerate(partition.wall_pieces(f)):
        weighted.append((f"wall{i}", 0.5, piece))

    pieces: dict[str, float] = {}
    for label, exponent, piece in weighted:
        if not np.any(np.abs(piece) > 0.0):
            continue
        pieces[label] = _gap_ratio(sigma, exponent, piece, np.asarray(d1 @ piece), du, grid.h)
    if not pieces:
        raise ZeroInput("Every localized piece of the state vanishes")

    top = max(profile.n0, 1)
    global_margin = _gap_ratio(sigma, top / (top + 1.0), f, np.asarray(d1 @ f), du, grid.h)
    return GapMargin(margin=min(pieces.values()), pieces=pieces, global_margin=global_margin)


def psi_bracket(gap: PseudoGap, lambda_tilde: float, log_factor: float) -> tuple[float, float]:
    """(c₁, c₂) with Ψ = c₁·λ̃/log-factor = c₂·λ̃, recorded next to Ψ."""
    return gap.psi * log_factor / lambda_tilde, gap.psi / lambda_tilde

