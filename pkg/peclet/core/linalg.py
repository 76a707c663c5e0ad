"""Shared power iteration and random test states."""

import logging
from typing import Callable, Optional

import numpy as np

from peclet.core.errors import NoConvergence
from peclet.core.grid import ComplexArray, Grid

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 200


def start_vector(n: int, seed: int = 0) -> ComplexArray:
    """Deterministic complex unit start vector."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def dominant_pair(
    apply_gram: Callable[[ComplexArray], ComplexArray],
    n: int,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
    upper: float = np.inf,
    initial: Optional[ComplexArray] = None,
) -> tuple[float, ComplexArray]:
    """Largest eigenvalue of a Hermitian positive semi-definite map, with its vector.

    ``apply_gram`` is typically v ↦ B*Bv, so the square root of the value
    is the largest singular value of B. Convergence is declared when the
    Rayleigh quotient changes by less than ``tol`` relative. ``initial``
    overrides the seeded start vector (warm starts along a time grid).
    """
    v = start_vector(n, seed) if initial is None else initial / np.linalg.norm(initial)
    previous = 0.0
    size = 0.0
    for iteration in range(1, max_iter + 1):
        w = apply_gram(v)
        value = float(np.real(np.vdot(v, w)))
        size = float(np.linalg.norm(w))
        if size == 0.0:
            return 0.0, v
        v = w / size
        if iteration > 1 and abs(value - previous) <= tol * abs(value):
            logger.debug("Power iteration converged in %d steps: %.12g", iteration, value)
            return value, v
        previous = value
    raise NoConvergence(lower=size, upper=upper, iterations=max_iter)


def power_iteration(
    apply_gram: Callable[[ComplexArray], ComplexArray],
    n: int,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
    upper: float = np.inf,
) -> float:
    value, _ = dominant_pair(apply_gram, n, tol=tol, max_iter=max_iter, seed=seed, upper=upper)
    return value


def random_smooth_state(
    grid: Grid, rng: np.random.Generator, modes: int = 8
) -> ComplexArray:
    """Random complex state built from the lowest ``modes`` eigenmodes of D2.

    Fourier modes e^{iηy} on the torus, cosines cos(πηy) on the channel,
    with amplitudes decaying like 1/(1+η²).
    """
    y = grid.nodes
    f = np.zeros(grid.n, dtype=np.complex128)
    if grid.periodic:
        for eta in range(-modes, modes + 1):
            c = rng.standard_normal() + 1j * rng.standard_normal()
            f = f + c / (1.0 + eta**2) * np.exp(1j * eta * y)
    else:
        for eta in range(0, 2 * modes + 1):
            c = rng.standard_normal() + 1j * rng.standard_normal()
            f = f + c / (1.0 + eta**2) * np.cos(np.pi * eta * y)
    return f


def normalized(grid: Grid, f: ComplexArray) -> ComplexArray:
    return f / np.sqrt(grid.norm2(f))
