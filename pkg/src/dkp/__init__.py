"""Kinetic dispersionless KP toolkit.

Submodules
----------
grid, singular, moments, frobenius, hierarchy, evolve, hodograph, coords
    Numerical layers, from lattices and singular integrals up to implicit solutions.
diagnostics, config, io, cli
    Named residual reports, JSON configuration, snapshot files and the ``dkp`` command.
"""

from .errors import (
    BadConfig,
    CFLViolation,
    DegenerateDerivative,
    DkpError,
    FormatError,
    NoConvergence,
    NonMonotone,
    SingularJacobian,
    UnderResolved,
)
from .grid import Field, GaussianProduct, PhaseGrid, Profile, make_grid, p_grid, sample_initial
from .singular import hilbert, lambda_of, pv_integral

__all__ = [
    "BadConfig",
    "CFLViolation",
    "DegenerateDerivative",
    "DkpError",
    "FormatError",
    "NoConvergence",
    "NonMonotone",
    "SingularJacobian",
    "UnderResolved",
    "Field",
    "GaussianProduct",
    "PhaseGrid",
    "Profile",
    "make_grid",
    "p_grid",
    "sample_initial",
    "hilbert",
    "lambda_of",
    "pv_integral",
]
