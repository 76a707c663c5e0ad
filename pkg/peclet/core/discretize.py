"""Finite-difference assembly of the per-mode operators L_{k,ν} and R_{k,ν}."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import scipy.sparse as sp

from peclet.core.grid import ComplexArray, Domain, Grid
from peclet.core.linalg import random_smooth_state
from peclet.core.profiles import ProfileSamples, ShearProfile

logger = logging.getLogger(__name__)

REFINE_BELOW_NU = 1e-6
CELLS_PER_LAYER = 8


class OperatorKind(Enum):
    """Elliptic L = iku − ν(∂_yy − k²) or hypoelliptic R = iku − ν∂_yy."""

    ELLIPTIC = "elliptic"
    HYPOELLIPTIC = "hypoelliptic"

    @classmethod
    def parse(cls, value: str) -> "OperatorKind":
        try:
            return cls(value.lower())
        except ValueError as e:
            raise ValueError(
                f"Unknown operator kind '{value}' (expected 'elliptic' or 'hypoelliptic')"
            ) from e


class BoundaryCondition(Enum):
    PERIODIC = "periodic"
    NO_FLUX = "no-flux"

    @classmethod
    def for_domain(cls, domain: Domain) -> "BoundaryCondition":
        return cls.PERIODIC if domain is Domain.TORUS else cls.NO_FLUX


def second_derivative_matrix(grid: Grid) -> sp.csr_matrix:
    """Three-point D2 with periodic wrap or ghost-cell reflection (Neumann)."""
    n, h2 = grid.n, grid.h**2
    main = np.full(n, -2.0 / h2)
    off = np.full(n - 1, 1.0 / h2)
    d2 = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    if grid.periodic:
        d2[0, n - 1] = 1.0 / h2
        d2[n - 1, 0] = 1.0 / h2
    else:
        d2[0, 0] = -1.0 / h2
        d2[n - 1, n - 1] = -1.0 / h2
    return d2.tocsr()


def first_derivative_matrix(grid: Grid) -> sp.csr_matrix:
    """Centered D1 with the same boundary handling as D2."""
    n, h = grid.n, grid.h
    off = np.full(n - 1, 1.0 / (2.0 * h))
    d1 = sp.diags([-off, off], [-1, 1], format="lil")
    if grid.periodic:
        d1[0, n - 1] = -1.0 / (2.0 * h)
        d1[n - 1, 0] = 1.0 / (2.0 * h)
    else:
        # ghost value equals the first interior value
        d1[0, 0] = -1.0 / (2.0 * h)
        d1[n - 1, n - 1] = 1.0 / (2.0 * h)
    return d1.tocsr()


def refined_grid_size(
    n: int, nu: float, k: float, n0: int, domain: Domain, auto_refine: bool = True
) -> int:
    """Grow n (by doubling) until the (ν/|k|)^{1/(n0+3)} layer spans 8 cells."""
    if not auto_refine or nu >= REFINE_BELOW_NU or k == 0:
        return n
    width = (nu / abs(k)) ** (1.0 / (n0 + 3)) * domain.length
    refined = n
    while width < CELLS_PER_LAYER * domain.length / refined:
        refined *= 2
    if refined != n:
        logger.info("Refined grid from %d to %d points for nu=%.3g", n, refined, nu)
    return refined


@dataclass(frozen=True, eq=False)
class ModeOperator:
    """A = iku + Hermitian diffusion part, for one x-frequency k."""

    matrix: sp.csc_matrix = field(repr=False)
    nu: float
    k: float
    kind: OperatorKind
    bc: BoundaryCondition
    grid: Grid = field(repr=False)
    profile_name: str
    samples: ProfileSamples = field(repr=False)
    d1: sp.csr_matrix = field(repr=False)
    d2: sp.csr_matrix = field(repr=False)
    sup_u: float = 0.0
    u_bounds: tuple[float, float] = (0.0, 0.0)

    @property
    def n(self) -> int:
        return self.grid.n

    def apply(self, f: ComplexArray) -> ComplexArray:
        return np.asarray(self.matrix @ f)

    def adjoint(self) -> sp.csc_matrix:
        return self.matrix.conj().T.tocsc()

    def hermitian_part(self) -> sp.csr_matrix:
        shift = self.k**2 if self.kind is OperatorKind.ELLIPTIC else 0.0
        identity = sp.identity(self.n, format="csr")
        return (self.nu * (shift * identity - self.d2)).tocsr()

    def skew_part(self) -> sp.csr_matrix:
        return sp.diags(1j * self.k * self.samples.u, format="csr")

    def dense(self) -> ComplexArray:
        return np.asarray(self.matrix.toarray(), dtype=np.complex128)

    def shifted(self, shift: complex) -> sp.csc_matrix:
        return (self.matrix - shift * sp.identity(self.n, format="csc")).tocsc()


def assemble_mode_operator(
    profile: ShearProfile,
    nu: float,
    k: float,
    kind: OperatorKind = OperatorKind.ELLIPTIC,
    grid: Optional[Grid] = None,
) -> ModeOperator:
    """Assemble A = ik·diag(u) + ν(k²I − D2) (elliptic) or ik·diag(u) − νD2."""
    if nu < 0.0:
        raise ValueError(f"Viscosity must be non-negative, got {nu}")
    grid = grid or profile.grid
    samples = profile.sample(grid)
    d2 = second_derivative_matrix(grid)
    d1 = first_derivative_matrix(grid)

    shift = k**2 if kind is OperatorKind.ELLIPTIC else 0.0
    identity = sp.identity(grid.n, format="csr")
    hermitian = nu * (shift * identity - d2)
    skew = sp.diags(1j * k * samples.u, format="csr")
    matrix = (skew + hermitian).astype(np.complex128).tocsc()

    return ModeOperator(
        matrix=matrix,
        nu=nu,
        k=k,
        kind=kind,
        bc=BoundaryCondition.for_domain(grid.domain),
        grid=grid,
        profile_name=profile.name,
        samples=samples,
        d1=d1,
        d2=d2,
        sup_u=float(np.max(np.abs(samples.u))),
        u_bounds=(float(np.min(samples.u)), float(np.max(samples.u))),
    )


@dataclass(frozen=True)
class NumericalRangeSample:
    """Sampled values ⟨Af, f⟩ for unit f, with sector and parabola diagnostics."""

    points: tuple[complex, ...]
    sector_ratio: float
    sector_bound: float
    parabola_constant: float


def numerical_range_sample(
    op: ModeOperator, samples: int, rng: np.random.Generator, modes: int = 8
) -> NumericalRangeSample:
    """Evaluate ⟨Af,f⟩ on random smooth unit states.

    ``sector_bound`` is |k|·max|u|, the bound on |Im⟨Af,f⟩|. The parabola
    constant max |Im z|·|k|/(ν(Re z)²) is meaningful for the hypoelliptic kind
    on near-constant states, where the range touches zero tangentially.
    """
    points = []
    ratio = 0.0
    parabola = 0.0
    for _ in range(samples):
        f = random_smooth_state(op.grid, rng, modes=modes)
        f = f / np.sqrt(op.grid.norm2(f))
        z = op.grid.inner(op.apply(f), f)
        points.append(z)
        if z.real > 0.0:
            ratio = max(ratio, abs(z.imag) / z.real)
            if op.k != 0:
                parabola = max(parabola, abs(z.imag) * abs(op.k) / (op.nu * z.real**2))
    return NumericalRangeSample(
        points=tuple(points),
        sector_ratio=ratio,
        sector_bound=abs(op.k) * op.sup_u,
        parabola_constant=parabola,
    )
