"""Covariance of the invariant measure of the stochastically forced shear equation.

The forced problem decouples in the x-frequency k, so the covariance is a
family of n×n blocks C_k = ν^a Σ_j |ψ_{k,j}|² ∫ v v* dt with
v(t) = e^{−tA_k}e_j. Blocks are integrated by Crank–Nicolson with the
trapezoid rule on the step grid; the k = 0 block is the heat flow and uses
its closed form.
"""

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import solve_continuous_lyapunov

from peclet.core.discretize import ModeOperator, assemble_mode_operator
from peclet.core.errors import TailNotReached
from peclet.core.grid import ComplexArray, Domain, Grid, RealArray
from peclet.core.linalg import power_iteration
from peclet.core.profiles import ShearProfile
from peclet.core.semigroup import CrankNicolson, decay_curve, default_dt
from peclet.utils.parallel import map_tasks

logger = logging.getLogger(__name__)

TAIL_TOL = 1e-8
NORM_TOL = 1e-8
NORM_MAX_ITER = 2000
DEFAULT_BUDGET = 1e6
CHUNK = 64


@dataclass(frozen=True)
class NoiseSpectrum:
    """Coefficients ψ_{k,j} of the colored noise on the box |k| ≤ K, |j| ≤ J."""

    K: int
    J: int
    coefficients: Mapping[tuple[int, int], complex] = field(repr=False)
    kill_zero_mode: bool = False

    @classmethod
    def rational(cls, K: int = 4, J: int = 4, kill_zero_mode: bool = False) -> "NoiseSpectrum":
        """ψ_{k,j} = 1/(1 + k² + j²) on the box, ψ_{0,0} = 0."""
        coefficients: dict[tuple[int, int], complex] = {}
        for k in range(-K, K + 1):
            for j in range(-J, J + 1):
                if (k, j) == (0, 0) or (kill_zero_mode and k == 0):
                    continue
                coefficients[(k, j)] = complex(1.0 / (1.0 + k**2 + j**2))
        return cls(K=K, J=J, coefficients=coefficients, kill_zero_mode=kill_zero_mode)

    @classmethod
    def explicit(
        cls,
        entries: Sequence[Sequence[float]],
        K: int,
        J: int,
        kill_zero_mode: bool = False,
    ) -> "NoiseSpectrum":
        """Entries are [k, j, re] or [k, j, re, im]; the conjugate partner is filled in."""
        coefficients: dict[tuple[int, int], complex] = {}
        for entry in entries:
            if len(entry) not in (3, 4):
                raise ValueError(f"Noise entry {list(entry)} must be [k, j, re] or [k, j, re, im]")
            k, j = int(entry[0]), int(entry[1])
            value = complex(entry[2], entry[3] if len(entry) == 4 else 0.0)
            if abs(k) > K or abs(j) > J:
                raise ValueError(f"Noise entry ({k}, {j}) lies outside the box K={K}, J={J}")
            if (k, j) == (0, 0):
                if value != 0.0:
                    raise ValueError("The (0, 0) noise coefficient must vanish")
                continue
            if kill_zero_mode and k == 0:
                continue
            for key, coeff in (((k, j), value), ((-k, -j), value.conjugate())):
                if key in coefficients and coefficients[key] != coeff:
                    raise ValueError(f"Noise entries at {key} break the reality pairing")
                coefficients[key] = coeff
        return cls(K=K, J=J, coefficients=coefficients, kill_zero_mode=kill_zero_mode)

    @classmethod
    def from_config(cls, config: Mapping[str, object]) -> "NoiseSpectrum":
        K = int(config.get("K", 4))  # type: ignore[call-overload]
        J = int(config.get("J", 4))  # type: ignore[call-overload]
        kill = bool(config.get("kill_zero_mode", False))
        law = str(config.get("law", "rational"))
        if law == "rational":
            return cls.rational(K, J, kill)
        if law == "explicit":
            entries = config.get("entries") or []
            return cls.explicit(entries, K, J, kill)  # type: ignore[arg-type]
        raise ValueError(f"Unknown noise law '{law}' (expected 'rational' or 'explicit')")

    @property
    def total(self) -> float:
        """‖Ψ‖² = Σ|ψ_{k,j}|²."""
        return float(sum(abs(c) ** 2 for c in self.coefficients.values()))

    def row(self, k: int) -> dict[int, complex]:
        return {j: c for (kk, j), c in sorted(self.coefficients.items()) if kk == k and c != 0.0}

    def x_modes(self) -> list[int]:
        """Nonnegative k with forcing; C_{−k} is the conjugate of C_k."""
        return sorted({abs(k) for (k, _), c in self.coefficients.items() if c != 0.0})

    def conjugated(self) -> "NoiseSpectrum":
        return NoiseSpectrum(
            K=self.K,
            J=self.J,
            coefficients={key: c.conjugate() for key, c in self.coefficients.items()},
            kill_zero_mode=self.kill_zero_mode,
        )

    def to_dict(self) -> dict[str, object]:
        return {
            "K": self.K,
            "J": self.J,
            "kill_zero_mode": self.kill_zero_mode,
            "total": self.total,
        }


@dataclass(frozen=True, eq=False)
class CovarianceBlock:
    """C_k in orthonormal grid coordinates (columns scaled by √h)."""

    k: int
    matrix: ComplexArray = field(repr=False)
    horizon: float
    error: float
    dt: float = 0.0
    dissipation: float = 0.0

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def norm(self, tol: float = NORM_TOL, seed: int = 0) -> float:
        """Largest eigenvalue by power iteration."""
        if not np.any(self.matrix):
            return 0.0
        return power_iteration(
            lambda v: self.matrix @ v, self.matrix.shape[0], tol=tol, max_iter=NORM_MAX_ITER, seed=seed
        )


def _require_torus(profile: ShearProfile) -> None:
    if profile.domain is not Domain.TORUS:
        raise ValueError("The forced problem is posed on the torus")


def mode_vectors(grid: Grid, js: Sequence[int]) -> ComplexArray:
    """Columns e^{ijy}/√(2π), unit in the discrete L² norm."""
    y = grid.nodes[:, None]
    return np.exp(1j * y * np.asarray(js, dtype=np.float64)[None, :]) / math.sqrt(2.0 * math.pi)


def zero_mode_variances(noise: NoiseSpectrum, nu: float, a: float) -> dict[int, float]:
    """ν^{a−1}|ψ_{0,j}|²/(2j²) for every forced j ≠ 0."""
    return {
        j: nu ** (a - 1.0) * abs(c) ** 2 / (2.0 * j**2)
        for j, c in noise.row(0).items()
        if j != 0
    }


def _zero_block(noise: NoiseSpectrum, nu: float, a: float, grid: Grid) -> CovarianceBlock:
    variances = zero_mode_variances(noise, nu, a)
    matrix = np.zeros((grid.n, grid.n), dtype=np.complex128)
    if variances:
        basis = math.sqrt(grid.h) * mode_vectors(grid, list(variances))
        matrix = (basis * np.array(list(variances.values()))) @ basis.conj().T
    return CovarianceBlock(k=0, matrix=matrix, horizon=math.inf, error=0.0)


@dataclass(frozen=True, eq=False)
class _ModeIntegrals:
    gram: ComplexArray
    dissipation: float
    horizon: float
    tail: float
    steps: int


def _integrate_modes(
    op: ModeOperator,
    columns: ComplexArray,
    dt: float,
    budget: float,
    tail_tol: float,
) -> _ModeIntegrals:
    """Trapezoid sums of h·∫vv*dt and ∫‖∇_k v‖²dt over CN trajectories of the columns.

    Raises TailNotReached carrying the partial integrals when the budget runs out.
    """
    stepper = CrankNicolson(op, dt)
    h = op.grid.h
    minus_d2 = -op.d2
    k2 = op.k**2
    v = np.array(columns, dtype=np.complex128)
    initial = h * np.sum(np.abs(v) ** 2, axis=0)
    active = initial > 0.0

    gram = np.zeros((op.n, op.n), dtype=np.complex128)
    dissipation = 0.0
    pending: list[ComplexArray] = []

    def energy(w: ComplexArray) -> float:
        return float(k2 * h * np.sum(np.abs(w) ** 2) + h * np.sum(np.real(np.conj(w) * (minus_d2 @ w))))

    def flush() -> None:
        nonlocal gram
        if pending:
            block = np.hstack(pending)
            gram += dt * (block @ block.conj().T)
            pending.clear()

    first = v.copy()
    previous_norms = initial
    norms = initial
    steps = 0
    t = 0.0
    while True:
        pending.append(v)
        dissipation += dt * energy(v)
        if len(pending) >= CHUNK:
            flush()
        norms = h * np.sum(np.abs(v) ** 2, axis=0)
        if steps > 0 and np.all(norms[active] <= tail_tol * initial[active]):
            break
        if t >= budget:
            flush()
            partial = _finish(gram, dissipation, first, v, dt, h, energy, t, previous_norms, norms, steps)
            raise TailNotReached(t, partial)
        previous_norms = norms
        v = stepper.step(v)
        steps += 1
        t = steps * dt

    flush()
    return _finish(gram, dissipation, first, v, dt, h, energy, t, previous_norms, norms, steps)


def _finish(
    gram: ComplexArray,
    dissipation: float,
    first: ComplexArray,
    last: ComplexArray,
    dt: float,
    h: float,
    energy: Callable[[ComplexArray], float],
    t: float,
    previous_norms: RealArray,
    norms: RealArray,
    steps: int,
) -> _ModeIntegrals:
    # trapezoid: endpoints carry half weight
    gram = gram - 0.5 * dt * (first @ first.conj().T + last @ last.conj().T)
    dissipation -= 0.5 * dt * (energy(first) + energy(last))
    gram = h * 0.5 * (gram + gram.conj().T)

    tail = 0.0
    for now, before in zip(norms, previous_norms):
        if now <= 0.0:
            continue
        ratio = now / before if before > 0.0 else 1.0
        tail += now * dt * ratio / (1.0 - ratio) if ratio < 1.0 else now * max(t, dt)
    return _ModeIntegrals(gram=gram, dissipation=dissipation, horizon=t, tail=tail, steps=steps)


def _block_columns(noise: NoiseSpectrum, k: int, grid: Grid) -> ComplexArray:
    row = noise.row(k)
    if not row:
        return np.zeros((grid.n, 0), dtype=np.complex128)
    return mode_vectors(grid, list(row)) * np.abs(np.array(list(row.values())))


def _block_at(
    op: ModeOperator,
    noise: NoiseSpectrum,
    nu: float,
    a: float,
    k: int,
    dt: float,
    budget: float,
    tail_tol: float,
) -> CovarianceBlock:
    columns = _block_columns(noise, k, op.grid)
    scale = nu**a
    try:
        integrals = _integrate_modes(op, columns, dt, budget, tail_tol)
    except TailNotReached as e:
        partial: _ModeIntegrals = e.partial
        e.partial = CovarianceBlock(
            k=k,
            matrix=scale * partial.gram,
            horizon=partial.horizon,
            error=scale * partial.tail,
            dt=dt,
            dissipation=scale * partial.dissipation,
        )
        raise
    return CovarianceBlock(
        k=k,
        matrix=scale * integrals.gram,
        horizon=integrals.horizon,
        error=scale * integrals.tail,
        dt=dt,
        dissipation=scale * integrals.dissipation,
    )


def covariance_block(
    profile: ShearProfile,
    noise: NoiseSpectrum,
    nu: float,
    a: float,
    k: int,
    grid: Optional[Grid] = None,
    dt: Optional[float] = None,
    budget: float = DEFAULT_BUDGET,
    tail_tol: float = TAIL_TOL,
    richardson: bool = False,
) -> CovarianceBlock:
    """C_k = ν^a Σ_j |ψ_{k,j}|² ∫₀^T v_j v_j* dt, v_j(t) = e^{−tA_k}e_j.

    T is the first step time at which every ‖v_j(T)‖² has fallen below
    ``tail_tol``·‖v_j(0)‖². With ``richardson`` the quadrature is repeated
    at dt/2 and combined as (4C_{dt/2} − C_dt)/3; the error estimate then
    includes ‖C_{dt/2} − C_dt‖/3. The CN trapezoid sum solves the
    Lyapunov equation with forcing Q + (dt²/4)·AQA*, so the extrapolation
    leaves only the truncated tail.
    """
    _require_torus(profile)
    if nu <= 0.0:
        raise ValueError(f"Viscosity must be positive, got {nu}")
    if abs(k) > noise.K:
        raise ValueError(f"Mode k={k} lies outside the noise box K={noise.K}")
    grid = grid or profile.grid
    if k == 0:
        return _zero_block(noise, nu, a, grid)

    op = assemble_mode_operator(profile, nu, float(k), grid=grid)
    step = dt or default_dt(op)
    coarse = _block_at(op, noise, nu, a, k, step, budget, tail_tol)
    if not richardson:
        logger.debug("Block k=%d: T=%.4g, tail=%.3g", k, coarse.horizon, coarse.error)
        return coarse

    fine = _block_at(op, noise, nu, a, k, 0.5 * step, budget, tail_tol)
    matrix = (4.0 * fine.matrix - coarse.matrix) / 3.0
    spread = float(np.linalg.norm(fine.matrix - coarse.matrix, 2)) / 3.0
    return CovarianceBlock(
        k=k,
        matrix=0.5 * (matrix + matrix.conj().T),
        horizon=fine.horizon,
        error=fine.error + spread,
        dt=fine.dt,
        dissipation=(4.0 * fine.dissipation - coarse.dissipation) / 3.0,
    )


def lyapunov_oracle(op: ModeOperator, noise: NoiseSpectrum, nu: float, a: float, k: int) -> ComplexArray:
    """Dense solution X of AX + XA* = ν^a Σ_j |ψ_{k,j}|² w_j w_j*."""
    columns = math.sqrt(op.grid.h) * _block_columns(noise, k, op.grid)
    forcing = nu**a * (columns @ columns.conj().T)
    solution = np.asarray(solve_continuous_lyapunov(op.dense(), forcing), dtype=np.complex128)
    return 0.5 * (solution + solution.conj().T)


@dataclass(frozen=True)
class BlockTask:
    """One (ν, k) block of a covariance sweep; picklable for worker pools."""

    profile: ShearProfile
    noise: NoiseSpectrum
    nu: float
    a: float
    k: int
    grid_n: Optional[int] = None
    dt: Optional[float] = None
    budget: float = DEFAULT_BUDGET
    richardson: bool = False


@dataclass(frozen=True)
class BlockNorm:
    nu: float
    k: int
    norm: float
    horizon: float
    error: float


def measure_block(task: BlockTask) -> BlockNorm:
    grid = Grid.build(task.profile.domain, task.grid_n) if task.grid_n else None
    block = covariance_block(
        task.profile,
        task.noise,
        task.nu,
        task.a,
        task.k,
        grid=grid,
        dt=task.dt,
        budget=task.budget,
        richardson=task.richardson,
    )
    norm = block.norm()
    logger.info("Covariance block nu=%.3g k=%d: %.6g", task.nu, task.k, norm)
    return BlockNorm(nu=task.nu, k=task.k, norm=norm, horizon=block.horizon, error=block.error)


@dataclass(frozen=True, eq=False)
class CovarianceSweep:
    """‖Q_ν‖ over a ν list with the fitted slope of log‖Q_ν‖ against log ν."""

    a: float
    profile: str
    nus: RealArray
    norms: RealArray
    slope: float
    blocks: tuple[BlockNorm, ...] = field(repr=False)

    @property
    def decreasing(self) -> bool:
        """True when ‖Q_ν‖ shrinks as ν decreases."""
        order = np.argsort(self.nus)
        return bool(np.all(np.diff(self.norms[order]) > 0.0))

    def rows(self) -> list[dict[str, object]]:
        return [
            {"profile": self.profile, "a": self.a, "nu": float(nu), "Qnorm": float(q), "slope": self.slope}
            for nu, q in zip(self.nus, self.norms)
        ]

    def block_rows(self) -> list[dict[str, object]]:
        return [
            {"profile": self.profile, "a": self.a, "nu": b.nu, "k": b.k, "block_norm": b.norm}
            for b in self.blocks
        ]


def covariance_norm_sweep(
    profile: ShearProfile,
    noise: NoiseSpectrum,
    a: float,
    nu_list: Sequence[float],
    grid_n: Optional[int] = None,
    dt: Optional[float] = None,
    budget: float = DEFAULT_BUDGET,
    workers: int = 1,
) -> CovarianceSweep:
    """‖Q_ν‖ = max_k ‖C_k‖ for each ν, blocks evaluated as independent tasks.

    Outside the window ((n0+1)/(n0+3), 1] no decay is predicted and the
    sweep is reported without judgement.
    """
    _require_torus(profile)
    threshold = (profile.n0 + 1.0) / (profile.n0 + 3.0)
    if not threshold < a <= 1.0:
        logger.warning("a=%g lies outside (%.3g, 1]; no decay of the covariance is predicted", a, threshold)
    if noise.row(0):
        logger.warning("Noise forces the x-average; the k=0 block does not vanish as nu -> 0")

    tasks = [
        BlockTask(profile, noise, float(nu), a, k, grid_n=grid_n, dt=dt, budget=budget)
        for nu in nu_list
        for k in noise.x_modes()
    ]
    blocks = tuple(map_tasks(measure_block, tasks, workers))
    nus = np.asarray([float(nu) for nu in nu_list])
    norms = np.array([max((b.norm for b in blocks if b.nu == nu), default=0.0) for nu in nus])
    slope = math.nan
    if nus.size >= 2 and np.all(norms > 0.0):
        slope = float(np.polyfit(np.log(nus), np.log(norms), 1)[0])
    return CovarianceSweep(a=a, profile=profile.name, nus=nus, norms=norms, slope=slope, blocks=blocks)


def stationary_energy_check(
    profile: ShearProfile,
    noise: NoiseSpectrum,
    nu: float,
    a: float,
    grid: Optional[Grid] = None,
    dt: Optional[float] = None,
    budget: float = DEFAULT_BUDGET,
    richardson: bool = True,
) -> float:
    """|2ν·E‖f‖²_{H¹} − ν^a‖Ψ‖²| / (ν^a‖Ψ‖²) over every forced block.

    Each k > 0 block stands for itself and its conjugate partner −k.
    """
    _require_torus(profile)
    expected = nu**a * noise.total
    if expected == 0.0:
        raise ValueError("Noise spectrum is identically zero")
    # heat flow: ∫‖∂v‖² = |ψ|²/(2ν) exactly
    energy = sum(nu**a * abs(c) ** 2 / (2.0 * nu) for j, c in noise.row(0).items() if j != 0)
    for k in noise.x_modes():
        if k == 0:
            continue
        block = covariance_block(profile, noise, nu, a, k, grid=grid, dt=dt, budget=budget, richardson=richardson)
        energy += 2.0 * block.dissipation
    error = abs(2.0 * nu * energy - expected) / expected
    logger.debug("Energy balance nu=%.3g a=%g: relative error %.3g", nu, a, error)
    return error


def covariance_upper_bound(
    profile: ShearProfile,
    noise: NoiseSpectrum,
    nu: float,
    a: float,
    grid: Optional[Grid] = None,
    horizon: Optional[float] = None,
    samples: int = 64,
) -> float:
    """ν^a Σ_{k≠0,j} |ψ_{k,j}|² ∫‖e^{−tA_k}‖²dt on a uniform time grid.

    The horizon defaults to the time at which the squared norm of the
    slowest block falls below the tail tolerance, estimated from ‖C_k‖.
    """
    _require_torus(profile)
    grid = grid or profile.grid
    total = 0.0
    for k, weight in _x_mode_weights(noise).items():
        op = assemble_mode_operator(profile, nu, float(k), grid=grid)
        end = horizon or covariance_block(profile, noise, nu, a, k, grid=grid).horizon
        times = np.linspace(0.0, end, samples)
        curve = decay_curve(op, t_grid=times)
        total += weight * float(trapezoid(curve.norms**2, curve.times))
    return nu**a * total


def _x_mode_weights(noise: NoiseSpectrum) -> dict[int, float]:
    """Σ_j|ψ_{k,j}|² per nonzero k, folding −k onto k."""
    weights: dict[int, float] = {}
    for (k, _), c in noise.coefficients.items():
        if k != 0:
            weights[abs(k)] = weights.get(abs(k), 0.0) + abs(c) ** 2
    return weights
