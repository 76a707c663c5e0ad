"""Crank–Nicolson propagation of e^{−tA}, operator norms and decay-rate fits."""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from peclet.core.discretize import ModeOperator, OperatorKind, assemble_mode_operator
from peclet.core.errors import NoConvergence, SolveFailure, WindowEmpty
from peclet.core.grid import ComplexArray, Grid, RealArray
from peclet.core.linalg import DEFAULT_MAX_ITER, DEFAULT_TOL, dominant_pair, start_vector
from peclet.core.profiles import ShearProfile
from peclet.core.weights import log_correction
from peclet.utils.parallel import map_tasks

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = (1e-8, 1e-1)
MIN_FIT_SAMPLES = 5
DT_RTOL = 1e-4
MAX_DT_HALVINGS = 6


def default_dt(op: ModeOperator) -> float:
    """0.05/(|k|·max|u| + νk² + 1)."""
    return 0.05 / (abs(op.k) * op.sup_u + op.nu * op.k**2 + 1.0)


class CrankNicolson:
    """(I + dt/2·A) f⁺ = (I − dt/2·A) f, factored once."""

    def __init__(self, op: ModeOperator, dt: float) -> None:
        if dt <= 0.0:
            raise ValueError(f"Time step must be positive, got {dt}")
        self.dt = dt
        identity = sp.identity(op.n, dtype=np.complex128, format="csc")
        half = 0.5 * dt * op.matrix
        try:
            self._plus = splu((identity + half).tocsc())
        except RuntimeError as e:
            raise SolveFailure(f"Crank-Nicolson factorization failed (dt={dt:.3g}): {e}") from e
        self._minus = (identity - half).tocsr()
        self._minus_h = self._minus.conj().T.tocsr()

    def step(self, f: ComplexArray) -> ComplexArray:
        return _finite(self._plus.solve(np.asarray(self._minus @ f)), self.dt)

    def step_adjoint(self, f: ComplexArray) -> ComplexArray:
        """Apply the adjoint step ((I + dt/2·A)⁻¹(I − dt/2·A))*."""
        return _finite(np.asarray(self._minus_h @ self._plus.solve(f, trans="H")), self.dt)


def _finite(f: ComplexArray, dt: float) -> ComplexArray:
    if not np.all(np.isfinite(f)):
        raise SolveFailure(f"Non-finite values after a Crank-Nicolson step (dt={dt:.3g})")
    return f


def _schedule(t_final: float, dt: float) -> tuple[int, float]:
    steps = int(math.floor(t_final / dt + 1e-9))
    remainder = t_final - steps * dt
    if remainder <= 1e-12 * max(1.0, t_final):
        remainder = 0.0
    return steps, remainder


class Propagator:
    """CN propagator of one operator, caching a factorization per step size."""

    def __init__(self, op: ModeOperator, dt: Optional[float] = None) -> None:
        self.op = op
        self.dt = dt or default_dt(op)
        self._steppers: dict[float, CrankNicolson] = {}

    def _stepper(self, dt: float) -> CrankNicolson:
        if dt not in self._steppers:
            self._steppers[dt] = CrankNicolson(self.op, dt)
        return self._steppers[dt]

    def forward(self, f: ComplexArray, t_final: float) -> ComplexArray:
        steps, remainder = _schedule(t_final, self.dt)
        stepper = self._stepper(self.dt)
        for _ in range(steps):
            f = stepper.step(f)
        if remainder:
            f = self._stepper(remainder).step(f)
        return f

    def backward(self, f: ComplexArray, t_final: float) -> ComplexArray:
        """Adjoint propagator; all steps commute so the order is irrelevant."""
        steps, remainder = _schedule(t_final, self.dt)
        stepper = self._stepper(self.dt)
        for _ in range(steps):
            f = stepper.step_adjoint(f)
        if remainder:
            f = self._stepper(remainder).step_adjoint(f)
        return f

    def gram(self, t: float) -> "GramMap":
        return GramMap(self, t)


@dataclass
class GramMap:
    propagator: Propagator
    t: float

    def __call__(self, v: ComplexArray) -> ComplexArray:
        return self.propagator.backward(self.propagator.forward(v, self.t), self.t)


def propagate(
    op: ModeOperator, f0: ComplexArray, t_final: float, dt: Optional[float] = None
) -> ComplexArray:
    """Advance f0 by CN steps of size ``dt``, landing exactly on ``t_final``."""
    if t_final < 0.0:
        raise ValueError(f"Final time must be non-negative, got {t_final}")
    f0 = np.asarray(f0, dtype=np.complex128)
    if f0.shape != (op.n,):
        raise ValueError(f"State has shape {f0.shape}, operator grid has {op.n} points")
    return Propagator(op, dt).forward(f0, t_final)


def _norm_with_vector(
    propagator: Propagator,
    t: float,
    tol: float,
    max_iter: int,
    seed: int,
    initial: Optional[ComplexArray],
) -> tuple[float, ComplexArray]:
    if initial is not None:
        # keep every direction populated in case the top singular vector switched
        initial = initial + 0.1 * start_vector(propagator.op.n, seed)
    try:
        value, vector = dominant_pair(
            propagator.gram(t),
            propagator.op.n,
            tol=tol,
            max_iter=max_iter,
            seed=seed,
            upper=1.0,
            initial=initial,
        )
    except NoConvergence as e:
        raise NoConvergence(
            lower=math.sqrt(max(e.lower, 0.0)), upper=1.0, iterations=e.iterations
        ) from e
    return math.sqrt(max(value, 0.0)), vector


def operator_norm(
    op: ModeOperator,
    t: float,
    dt: Optional[float] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
) -> float:
    """‖e^{−tA}‖ as the top singular value of the CN propagator."""
    if t < 0.0:
        raise ValueError(f"Time must be non-negative, got {t}")
    if t == 0.0:
        return 1.0
    norm, _ = _norm_with_vector(Propagator(op, dt), t, tol, max_iter, seed, None)
    return norm


@dataclass(frozen=True, eq=False)
class DecayCurve:
    """Sampled ‖e^{−tA}‖ for one operator."""

    times: RealArray
    norms: RealArray
    nu: float
    k: float
    kind: OperatorKind
    profile: str
    dt: float = 0.0

    def rows(self) -> list[dict[str, object]]:
        return [
            {
                "profile": self.profile,
                "kind": self.kind.value,
                "nu": self.nu,
                "k": self.k,
                "t": float(t),
                "norm": float(norm),
            }
            for t, norm in zip(self.times, self.norms)
        ]


def geometric_times(t_max: float, count: int = 24) -> RealArray:
    """0 followed by ``count − 1`` geometrically spaced times up to ``t_max``."""
    return np.concatenate([[0.0], np.geomspace(t_max * 1e-3, t_max, count - 1)])


def decay_curve(
    op: ModeOperator,
    t_grid: Optional[Sequence[float]] = None,
    dt: Optional[float] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
    t_max: float = 100.0,
) -> DecayCurve:
    """operator_norm along ``t_grid``, warm-starting each power iteration."""
    times = np.asarray(t_grid if t_grid is not None else geometric_times(t_max), dtype=np.float64)
    if np.any(np.diff(times) <= 0.0):
        raise ValueError("Time grid must be strictly increasing")
    propagator = Propagator(op, dt)
    norms = np.empty(times.size)
    vector: Optional[ComplexArray] = None
    for i, t in enumerate(times):
        if t == 0.0:
            norms[i] = 1.0
            continue
        norms[i], vector = _norm_with_vector(propagator, float(t), tol, max_iter, seed, vector)
    return DecayCurve(
        times=times,
        norms=norms,
        nu=op.nu,
        k=op.k,
        kind=op.kind,
        profile=op.profile_name,
        dt=propagator.dt,
    )


def adaptive_decay_curve(
    op: ModeOperator,
    window: tuple[float, float] = DEFAULT_WINDOW,
    dt: Optional[float] = None,
    samples: int = 24,
    t_start: float = 1.0,
    t_limit: float = 1e7,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
) -> DecayCurve:
    """Find the window by doubling t, then sample linearly through it."""
    low, high = window
    propagator = Propagator(op, dt)
    vector: Optional[ComplexArray] = None

    def norm_at(t: float) -> float:
        nonlocal vector
        value, vector = _norm_with_vector(propagator, t, tol, max_iter, seed, vector)
        return value

    t = t_start
    previous = 0.0
    while norm_at(t) > high:
        previous = t
        t *= 2.0
        if t > t_limit:
            raise WindowEmpty(f"Norm stays above {high:g} up to t={t_limit:g}")
    enter = max(previous, t / 2.0) if previous else t
    exit_time = t
    while norm_at(exit_time) > low and exit_time < t_limit:
        exit_time *= 2.0
    times = np.concatenate([[0.0], np.linspace(enter, exit_time, samples)])
    logger.debug("Adaptive window for nu=%.3g k=%g: t in [%.4g, %.4g]", op.nu, op.k, enter, exit_time)
    return decay_curve(op, times, dt=propagator.dt, tol=tol, max_iter=max_iter, seed=seed)


def converge_dt(
    op: ModeOperator,
    t: float,
    dt: Optional[float] = None,
    rtol: float = DT_RTOL,
    max_halvings: int = MAX_DT_HALVINGS,
    seed: int = 0,
) -> float:
    """Largest dt = default/2^m whose halving moves ‖e^{−tA}‖ by less than ``rtol`` relative."""
    dt = dt or default_dt(op)
    current = operator_norm(op, t, dt=dt, seed=seed, tol=rtol * 1e-2)
    for _ in range(max_halvings):
        refined = operator_norm(op, t, dt=dt / 2.0, seed=seed, tol=rtol * 1e-2)
        if abs(refined - current) <= rtol * abs(refined):
            return dt
        dt, current = dt / 2.0, refined
    logger.warning("Time step not converged after %d halvings (dt=%.3g)", max_halvings, dt)
    return dt


@dataclass(frozen=True)
class DecayFit:
    rate: float
    prefactor: float
    window: tuple[float, float]
    samples: int
    residual: float


def fit_decay_rate(curve: DecayCurve, window: tuple[float, float] = DEFAULT_WINDOW) -> DecayFit:
    """Least squares of log‖e^{−tA}‖ against t over the samples inside ``window``."""
    low, high = window
    mask = (curve.norms >= low) & (curve.norms <= high)
    count = int(np.count_nonzero(mask))
    if count < MIN_FIT_SAMPLES:
        raise WindowEmpty(
            f"Only {count} samples inside window [{low:g}, {high:g}]; need {MIN_FIT_SAMPLES}"
        )
    t = curve.times[mask]
    log_norms = np.log(curve.norms[mask])
    slope, intercept = np.polyfit(t, log_norms, 1)
    residual = float(np.sqrt(np.mean((log_norms - (slope * t + intercept)) ** 2)))
    return DecayFit(
        rate=float(-slope),
        prefactor=float(np.exp(intercept)),
        window=window,
        samples=count,
        residual=residual,
    )


@dataclass(frozen=True)
class RateTask:
    """One (ν, k) point of an exponent sweep; picklable for worker pools."""

    profile: ShearProfile
    kind: OperatorKind
    nu: float
    k: float
    window: tuple[float, float] = DEFAULT_WINDOW
    grid_n: Optional[int] = None
    dt: Optional[float] = None
    seed: int = 0
    converge: bool = True


@dataclass(frozen=True, eq=False)
class RateMeasurement:
    nu: float
    k: float
    fit: DecayFit
    curve: DecayCurve = field(repr=False)

    @property
    def rate(self) -> float:
        return self.fit.rate


def measure_rate(task: RateTask) -> RateMeasurement:
    grid = Grid.build(task.profile.domain, task.grid_n) if task.grid_n else None
    op = assemble_mode_operator(task.profile, task.nu, task.k, kind=task.kind, grid=grid)
    curve = adaptive_decay_curve(op, window=task.window, dt=task.dt, seed=task.seed)
    if task.dt is None and task.converge:
        # the first sample after t = 0 is the window entry
        dt = converge_dt(op, float(curve.times[1]), dt=curve.dt, seed=task.seed)
        if dt < curve.dt:
            curve = decay_curve(op, curve.times, dt=dt, seed=task.seed)
    fit = fit_decay_rate(curve, task.window)
    logger.info("Rate nu=%.3g k=%g: %.6g", task.nu, task.k, fit.rate)
    return RateMeasurement(nu=task.nu, k=task.k, fit=fit, curve=curve)


@dataclass(frozen=True)
class ExponentFit:
    """log(rate) = log c + p·log ν + q·log|k|; p or q is None when not varied."""

    rate: float
    prefactor: float
    nu_exponent: Optional[float]
    k_exponent: Optional[float]
    residual: float
    log_corrected: bool
    window: tuple[float, float] = DEFAULT_WINDOW

    def to_dict(self) -> dict[str, object]:
        return {
            "rate": self.rate,
            "C": self.prefactor,
            "p": self.nu_exponent,
            "q": self.k_exponent,
            "residual": self.residual,
            "log_corrected": self.log_corrected,
            "window": list(self.window),
        }


def fit_exponents(
    measurements: Sequence[RateMeasurement],
    log_corrected: bool = False,
    window: tuple[float, float] = DEFAULT_WINDOW,
) -> ExponentFit:
    """Fit the scaling exponents of the measured rates.

    With ``log_corrected`` each rate is multiplied by (1 + log|k| + log ν⁻¹)²
    before fitting, undoing the logarithmic loss of the rate estimate.
    """
    if len(measurements) < 2:
        raise ValueError("Exponent fits need at least two measurements")
    nus = np.array([m.nu for m in measurements])
    ks = np.abs(np.array([m.k for m in measurements]))
    rates = np.array([m.rate for m in measurements])
    if log_corrected:
        rates = rates * np.array([log_correction(m.nu, m.k) for m in measurements])
    if np.any(rates <= 0.0):
        raise ValueError("Measured rates must be positive to fit exponents")

    columns = [np.ones_like(nus)]
    vary_nu = np.ptp(np.log(nus)) > 0.0
    vary_k = np.ptp(np.log(ks)) > 0.0
    if vary_nu:
        columns.append(np.log(nus))
    if vary_k:
        columns.append(np.log(ks))
    design = np.column_stack(columns)
    target = np.log(rates)
    coeffs, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = float(np.sqrt(np.mean((design @ coeffs - target) ** 2)))

    p = float(coeffs[1]) if vary_nu else None
    q = float(coeffs[-1]) if vary_k else None
    prefactors = np.array([m.fit.prefactor for m in measurements])
    return ExponentFit(
        rate=float(np.exp(coeffs[0])),
        prefactor=float(np.exp(np.mean(np.log(prefactors)))),
        nu_exponent=p,
        k_exponent=q,
        residual=residual,
        log_corrected=log_corrected,
        window=window,
    )


@dataclass(frozen=True, eq=False)
class ExponentSweep:
    measurements: tuple[RateMeasurement, ...]
    raw: ExponentFit
    corrected: ExponentFit


def sweep_exponents(
    profile: ShearProfile,
    kind: OperatorKind,
    nu_list: Sequence[float],
    k_list: Sequence[float],
    window: tuple[float, float] = DEFAULT_WINDOW,
    kappa0: Optional[float] = 1e-2,
    grid_n: Optional[int] = None,
    workers: int = 1,
    seed: int = 0,
    dt: Optional[float] = None,
    converge: bool = True,
) -> ExponentSweep:
    """Measure rates over ν_list × k_list and fit raw and log-corrected exponents.

    ``kappa0`` bounds ν/|k| for the elliptic kind; hypoelliptic sweeps at
    ν = 1 run outside that regime and skip the check. Without an explicit
    ``dt`` each point halves the default step until the norm at the window
    entry settles (``converge``).
    """
    tasks = []
    for nu in nu_list:
        for k in k_list:
            if kind is OperatorKind.ELLIPTIC and kappa0 is not None and nu / abs(k) > kappa0:
                raise ValueError(f"nu/|k| = {nu / abs(k):.3g} exceeds kappa0 = {kappa0:g}")
            tasks.append(
                RateTask(
                    profile,
                    kind,
                    float(nu),
                    float(k),
                    window=window,
                    grid_n=grid_n,
                    dt=dt,
                    seed=seed,
                    converge=converge,
                )
            )
    measurements = tuple(map_tasks(measure_rate, tasks, workers))
    return ExponentSweep(
        measurements=measurements,
        raw=fit_exponents(measurements, log_corrected=False, window=window),
        corrected=fit_exponents(measurements, log_corrected=True, window=window),
    )


def sector_cotangent(op: ModeOperator) -> float:
    """cot δ = ‖u‖∞|k| / (ν(1 + k²)) for the sector containing the numerical range."""
    if op.sup_u == 0.0 or op.k == 0:
        return 0.0
    if op.nu == 0.0:
        return math.inf
    return op.sup_u * abs(op.k) / (op.nu * (1.0 + op.k**2))


def ggn_bound(op: ModeOperator, t: float, psi: float, c_univ: float = 1.0) -> float:
    """min{1, C·max(1, cot δ)·e^{−Ψt/2}}."""
    return min(1.0, c_univ * max(1.0, sector_cotangent(op)) * math.exp(-0.5 * psi * t))


def calibrate_ggn_constant(curve: DecayCurve, op: ModeOperator, psi: float) -> float:
    """Smallest C making the sector bound hold on a reference curve (u ≡ 0 gives 1)."""
    envelope = max(1.0, sector_cotangent(op)) * np.exp(-0.5 * psi * curve.times)
    return float(np.max(curve.norms / envelope))


def ggn_violations(
    curve: DecayCurve, op: ModeOperator, psi: float, c_univ: float = 1.0, slack: float = 1e-3
) -> list[float]:
    """Times at which the measured norm exceeds the sector bound by more than ``slack``."""
    return [
        float(t)
        for t, norm in zip(curve.times, curve.norms)
        if norm > ggn_bound(op, float(t), psi, c_univ) * (1.0 + slack)
    ]


def hypoelliptic_bound(op: ModeOperator, t: float, psi: float, c: float = 1.0) -> float:
    """min{1, c|k|/(νΨ)·e^{−Ψt/2}} for the parabolic numerical range."""
    if op.nu == 0.0 or psi == 0.0:
        return 1.0
    return min(1.0, c * abs(op.k) / (op.nu * psi) * math.exp(-0.5 * psi * t))


def propagator_matrix(op: ModeOperator, t: float, dt: Optional[float] = None) -> ComplexArray:
    """Dense CN propagator for small grids."""
    dt = dt or default_dt(op)
    a = op.dense()
    identity = np.eye(op.n, dtype=np.complex128)

    def step_matrix(h: float) -> ComplexArray:
        return la.solve(identity + 0.5 * h * a, identity - 0.5 * h * a)

    steps, remainder = _schedule(t, dt)
    result = np.linalg.matrix_power(step_matrix(dt), steps)
    if remainder:
        result = step_matrix(remainder) @ result
    return result


def propagator_norm(op: ModeOperator, t: float, dt: Optional[float] = None) -> float:
    return float(la.svdvals(propagator_matrix(op, t, dt))[0])


def exponential_norm(op: ModeOperator, t: float) -> float:
    """‖expm(−tA)‖ by dense SVD."""
    return float(la.svdvals(la.expm(-t * op.dense()))[0])


def richardson_norm(op: ModeOperator, t: float, dt: Optional[float] = None) -> float:
    """(4‖P_{dt/2}‖ − ‖P_dt‖)/3, removing the O(dt²) CN error."""
    dt = dt or default_dt(op)
    return (4.0 * propagator_norm(op, t, dt / 2.0) - propagator_norm(op, t, dt)) / 3.0
