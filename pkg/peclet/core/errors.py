"""Exception hierarchy for numerical failures."""

from typing import Any, Optional


class PecletError(Exception):
    """Base class for every numerical failure raised by peclet."""


class NoFiniteOrder(PecletError):
    """A critical point whose derivatives all vanish up to the search limit."""

    def __init__(self, location: float, max_order: int) -> None:
        super().__init__(
            f"Critical point at y={location:.12g} has no finite vanishing order "
            f"up to derivative {max_order + 1}"
        )
        self.location = location
        self.max_order = max_order


class NonSmooth(PecletError):
    """Derivative evaluators are not available for a profile."""


class DegenerateSpacing(PecletError):
    """The partition width is too small for the sampling grid."""

    def __init__(self, delta: float, spacing: float) -> None:
        super().__init__(
            f"Partition width delta={delta:.6g} is below 4 grid spacings "
            f"(h={spacing:.6g}); refine the grid"
        )
        self.delta = delta
        self.spacing = spacing


class ConstraintViolated(PecletError):
    """A weight constraint fails; ``margin`` is negative."""

    def __init__(self, name: str, margin: float) -> None:
        super().__init__(f"Constraint '{name}' violated (margin {margin:.6g})")
        self.name = name
        self.margin = margin


class SolveFailure(PecletError):
    """A sparse factorization or solve broke down."""


class NoConvergence(PecletError):
    """Power iteration hit its iteration cap."""

    def __init__(self, lower: float, upper: float, iterations: int) -> None:
        super().__init__(
            f"No convergence after {iterations} iterations; "
            f"value in [{lower:.10g}, {upper:.10g}]"
        )
        self.lower = lower
        self.upper = upper
        self.iterations = iterations


class WindowEmpty(PecletError):
    """Too few decay samples fall inside the fit window."""


class TruncationNotConverged(PecletError):
    """Domain doubling did not stabilise a model ground energy."""


class ZeroInput(PecletError):
    """Every localized piece of the input state vanishes."""


class GridMismatch(PecletError):
    """A state and the weights live on different grids."""


class CertificateFailed(PecletError):
    """The energy functional increased along a trajectory."""

    def __init__(
        self, time: float, breakdown: Optional[dict[str, Any]] = None
    ) -> None:
        super().__init__(f"Hypocoercivity certificate failed at t={time:.6g}")
        self.time = time
        self.breakdown = breakdown or {}


class UnknownLemma(PecletError):
    """The requested lemma is not in the registry."""


class ResolutionExceeded(PecletError):
    """The mixed state can no longer be resolved on the grid."""


class TailNotReached(PecletError):
    """Covariance integration stopped before the integrand decayed."""

    def __init__(self, time: float, partial: Any = None) -> None:
        super().__init__(
            f"Covariance integrand not decayed by the time budget t={time:.6g}"
        )
        self.time = time
        self.partial = partial


class OracleMismatch(PecletError):
    """A sparse computation disagrees with its dense reference beyond tolerance."""
