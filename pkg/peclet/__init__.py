"""
Peclet Lab - numerical experiments on enhanced dissipation in shear flows.

Peclet Lab discretizes the advection-diffusion operator of a shear u(y),
measures how fast its semigroup decays as the viscosity vanishes, and checks
the energy functionals, spectral gaps and covariance limits that explain it.
"""

__version__ = "0.1.0"
__author__ = "Peclet Lab Contributors"
__license__ = "MIT"

from peclet.core.config import RunConfig
from peclet.core.discretize import OperatorKind, assemble_mode_operator
from peclet.core.profiles import ShearProfile, make_profile

__all__ = [
    "__version__",
    "__author__",
    "__license__",
    "RunConfig",
    "OperatorKind",
    "ShearProfile",
    "assemble_mode_operator",
    "make_profile",
]
