"""Sampling grids for the y-direction."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import NDArray
from typing_extensions import TypeAlias

RealArray: TypeAlias = NDArray[np.float64]
ComplexArray: TypeAlias = NDArray[np.complex128]

MIN_GRID_POINTS = 64


class Domain(Enum):
    """The y-domain of the shear: periodic circle or no-flux channel."""

    TORUS = "torus"
    CHANNEL = "channel"

    @property
    def length(self) -> float:
        return 2.0 * np.pi if self is Domain.TORUS else 1.0

    @classmethod
    def parse(cls, value: str) -> "Domain":
        try:
            return cls(value.lower())
        except ValueError as e:
            raise ValueError(
                f"Unknown domain '{value}' (expected 'torus' or 'channel')"
            ) from e


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform grid: periodic nodes on the torus, cell centres on the channel."""

    domain: Domain
    n: int
    nodes: RealArray = field(repr=False)

    @classmethod
    def build(cls, domain: Domain, n: int) -> "Grid":
        if n < MIN_GRID_POINTS:
            raise ValueError(
                f"Grid needs at least {MIN_GRID_POINTS} points, got {n}"
            )
        h = domain.length / n
        if domain is Domain.TORUS:
            nodes = h * np.arange(n, dtype=np.float64)
        else:
            nodes = h * (np.arange(n, dtype=np.float64) + 0.5)
        nodes.setflags(write=False)
        return cls(domain=domain, n=n, nodes=nodes)

    @property
    def h(self) -> float:
        return self.domain.length / self.n

    @property
    def periodic(self) -> bool:
        return self.domain is Domain.TORUS

    def matches(self, other: "Grid") -> bool:
        return self.domain is other.domain and self.n == other.n

    def inner(self, a: ComplexArray, b: ComplexArray) -> complex:
        """Discrete L² inner product ⟨a, b⟩ = h Σ a·conj(b)."""
        return complex(self.h * np.vdot(b, a))

    def norm2(self, a: ComplexArray) -> float:
        """Squared discrete L² norm."""
        return float(self.h * np.real(np.vdot(a, a)))

    def distance(self, y: RealArray, center: float) -> RealArray:
        """Signed distance to ``center``, wrapped on the torus."""
        d = np.asarray(y, dtype=np.float64) - center
        if self.periodic:
            d = np.mod(d + np.pi, 2.0 * np.pi) - np.pi
        return d
