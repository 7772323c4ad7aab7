"""Conserved densities ``H_{h,n} = (1/n!) int h(f) lambda^n dp`` and their flows.

A density generates the kinetic flow ``f_t = u_p f_x - u_x f_p`` with ``u``
its variational derivative. The same flow is also produced by the algebra
kernel of the previous level applied to ``f_x``; both routes are provided so
they can be checked against each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable

import numpy as np

from .errors import BadConfig
from .frobenius import TangentCoefficient, _difference_quotient
from .grid import DECAY_TOL, Field, Profile, integrate, require_decay, spectral_derivative
from .singular import LambdaProfile, lambda_arrays, lambda_of, pv_array

__all__ = [
    "PowerLaw",
    "CustomFunction",
    "DensitySpec",
    "HierarchyField",
    "density",
    "density_per_slice",
    "var_derivative",
    "hierarchy_vf",
    "poisson_rhs",
    "hamiltonian_rhs",
    "kernel_rhs",
]


@dataclass(frozen=True)
class PowerLaw:
    """``h(f) = f**m`` with ``m >= 1``."""

    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise BadConfig("density.h.power: must be an integer >= 1")

    def value(self, f):
        return f**self.m

    def d1(self, f):
        return self.m * f ** (self.m - 1)

    def d2(self, f):
        return self.m * (self.m - 1) * f ** (self.m - 2) if self.m >= 2 else np.zeros_like(f)

    def describe(self) -> str:
        return f"f^{self.m}"


@dataclass(frozen=True)
class CustomFunction:
    """Smooth ``h`` with ``h(0) = 0`` given by callables for ``h``, ``h'``, ``h''``."""

    value: Callable
    d1: Callable
    d2: Callable
    name: str = "custom"

    def __post_init__(self):
        if abs(float(self.value(np.float64(0.0)))) > 0.0:
            raise BadConfig("density.h: must vanish at 0")

    def describe(self) -> str:
        return self.name


@dataclass(frozen=True)
class DensitySpec:
    h: PowerLaw | CustomFunction
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise BadConfig("density.n: must be >= 0")

    def at_level(self, n: int) -> "DensitySpec":
        return DensitySpec(self.h, n)

    def describe(self) -> str:
        return f"H[{self.h.describe()},{self.n}]"


@dataclass(frozen=True, eq=False)
class HierarchyField:
    """Vector field with coefficient ``-dH/df`` (in the ``h f'`` representation)."""

    spec: DensitySpec
    X: TangentCoefficient


def _lam(f: Profile, lam: LambdaProfile | None) -> LambdaProfile:
    return lambda_of(f) if lam is None else lam


def density(f: Profile, lam: LambdaProfile | None, spec: DensitySpec, decay_tol: float = DECAY_TOL) -> float:
    lam = _lam(f, lam)
    integrand = spec.h.value(f.values) * lam.values**spec.n
    require_decay(integrand, f"density {spec.describe()}", decay_tol)
    return float(integrate(integrand, f.dp) / factorial(spec.n))


def _variational(f, fp, lam, lam_p, spec: DensitySpec, with_slope: bool = True):
    """Variational derivative and its p-derivative along the last axis.

    The slope is assembled from the chain rule and ``P[g]' = P[g']`` rather than
    by differentiating the (non-decaying) derivative spectrally.
    """
    n, h = spec.n, spec.h
    u = h.d1(f) * lam**n / factorial(n)
    up = h.d2(f) * fp * lam**n / factorial(n) if with_slope else None
    if n >= 1:
        g = h.value(f) * lam ** (n - 1)
        u = u - pv_array(g) / factorial(n - 1)
        if with_slope:
            gp = h.d1(f) * fp * lam ** (n - 1)
            if n >= 2:
                gp = gp + (n - 1) * h.value(f) * lam ** (n - 2) * lam_p
            up = up + h.d1(f) * lam ** (n - 1) * lam_p / factorial(n - 1) - pv_array(gp) / factorial(n - 1)
    return u, up


def var_derivative(f: Profile, lam: LambdaProfile | None, spec: DensitySpec) -> Profile:
    """``(1/n!) h'(f) lambda^n - (1/(n-1)!) pv(h(f) lambda^{n-1})``."""
    lam = _lam(f, lam)
    fp = spectral_derivative(f.values, f.dp)
    u, _ = _variational(f.values, fp, lam.values, lam.prime, spec, with_slope=False)
    return f.with_values(u)


def hierarchy_vf(f: Profile, lam: LambdaProfile | None, spec: DensitySpec) -> HierarchyField:
    """Field whose coefficient is minus the variational derivative."""
    lam = _lam(f, lam)
    fp = spectral_derivative(f.values, f.dp)
    u, up = _variational(f.values, fp, lam.values, lam.prime, spec)
    return HierarchyField(spec, TangentCoefficient(f.with_values(-u), -up))


def density_per_slice(field: Field, spec: DensitySpec) -> np.ndarray:
    """``H_{h,n}`` of every x-slice."""
    grid = field.grid
    lam, _ = lambda_arrays(field.values, grid.dp, grid.p)
    return integrate(spec.h.value(field.values) * lam**spec.n, grid.dp) / factorial(spec.n)


def _slice_data(field: Field):
    grid = field.grid
    fv = field.values
    fp = spectral_derivative(fv, grid.dp, axis=1)
    lam, lam_p = lambda_arrays(fv, grid.dp, grid.p)
    return fv, fp, lam, lam_p


def poisson_rhs(field: Field, spec: DensitySpec) -> np.ndarray:
    """``u_p f_x - u_x f_p`` with ``u`` the variational derivative of ``spec`` itself."""
    grid = field.grid
    fv, fp, lam, lam_p = _slice_data(field)
    u, up = _variational(fv, fp, lam, lam_p, spec)
    fx = spectral_derivative(fv, grid.dx, axis=0)
    ux = spectral_derivative(u, grid.dx, axis=0)
    return up * fx - ux * fp


def hamiltonian_rhs(field: Field, spec: DensitySpec) -> Field:
    """Time derivative of the flow labelled by ``spec``; uses the density one level up."""
    return field.with_values(poisson_rhs(field, spec.at_level(spec.n + 1)))


def kernel_rhs(field: Field, spec: DensitySpec) -> Field:
    """Same flow through the algebra kernel of ``hierarchy_vf(spec)`` applied to ``f_x``."""
    grid = field.grid
    fv, fp, lam, lam_p = _slice_data(field)
    u, up = _variational(fv, fp, lam, lam_p, spec)
    fx = spectral_derivative(fv, grid.dx, axis=0)
    coeff, slope = -u, -up
    diag = pv_array(coeff * fp) - coeff * lam_p
    out = np.empty_like(fv)
    for i in range(grid.n_x):
        dq = _difference_quotient(coeff[i], slope[i], grid.p)
        out[i] = fp[i] * (dq @ fx[i]) * grid.dp + diag[i] * fx[i]
    return field.with_values(out)
