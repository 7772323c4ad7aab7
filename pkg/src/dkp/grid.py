"""Uniform phase-space lattices, sampled profiles and fields, decay diagnostics.

Grids are left-closed: node ``i`` sits at ``min + i * spacing`` and there is no
node at ``max``. A sampled function is treated as "resolved" when its values on
the outer 5% of nodes are negligible relative to its peak, which is the
numerical stand-in for rapid decay used throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import BadConfig, UnderResolved

DECAY_TOL = 1e-10
EDGE_FRACTION = 0.05

__all__ = [
    "DECAY_TOL",
    "PhaseGrid",
    "Profile",
    "Field",
    "MomentVector",
    "GaussianProduct",
    "DecayReport",
    "make_grid",
    "p_grid",
    "sample_initial",
    "decay_report",
    "boundary_ratio",
    "require_decay",
    "spectral_derivative",
    "integrate",
]


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform left-closed lattice on ``[x_min, x_max) x [p_min, p_max)``."""

    x_min: float
    x_max: float
    n_x: int
    p_min: float
    p_max: float
    n_p: int

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_x

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / self.n_p

    @cached_property
    def x(self) -> np.ndarray:
        nodes = self.x_min + self.dx * np.arange(self.n_x)
        nodes.setflags(write=False)
        return nodes

    @cached_property
    def p(self) -> np.ndarray:
        nodes = self.p_min + self.dp * np.arange(self.n_p)
        nodes.setflags(write=False)
        return nodes

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_x, self.n_p)

    def as_dict(self) -> dict:
        return {
            "x_min": self.x_min,
            "x_max": self.x_max,
            "n_x": self.n_x,
            "p_min": self.p_min,
            "p_max": self.p_max,
            "n_p": self.n_p,
        }


def _frozen(values, shape=None, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    if shape is not None and arr.shape != shape:
        raise BadConfig(f"values: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise BadConfig("values: non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Profile:
    """Samples of a function of ``p`` on the grid's p-axis.

    Parameters
    ----------
    grid : PhaseGrid
        Only the p-axis is used.
    values : array_like
        ``n_p`` samples.
    exterior : array_like, optional
        Generator of the values outside the window. When present, the profile
        equals the lattice Hilbert transform of ``exterior`` at every node of
        the infinite lattice, which lets slowly decaying transforms be
        transformed again without truncation error.
    """

    grid: PhaseGrid
    values: np.ndarray
    exterior: np.ndarray | None = None

    def __post_init__(self):
        dtype = complex if np.iscomplexobj(self.values) else float
        object.__setattr__(self, "values", _frozen(self.values, (self.grid.n_p,), dtype))
        if self.exterior is not None:
            object.__setattr__(self, "exterior", _frozen(self.exterior, (self.grid.n_p,)))

    @property
    def p(self) -> np.ndarray:
        return self.grid.p

    @property
    def dp(self) -> float:
        return self.grid.dp

    def with_values(self, values, exterior=None) -> "Profile":
        return Profile(self.grid, values, exterior)

    def derivative(self, order: int = 1) -> "Profile":
        return self.with_values(spectral_derivative(self.values, self.dp, order=order))

    def integral(self) -> float:
        return integrate(self.values, self.dp)

    def __len__(self) -> int:
        return self.grid.n_p


@dataclass(frozen=True, eq=False)
class Field:
    """Samples of ``f(x, p)``; row ``i`` is the slice at ``x_i``."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.shape))

    def row(self, i: int) -> Profile:
        return Profile(self.grid, self.values[i])

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)

    def d_x(self, order: int = 1) -> np.ndarray:
        return spectral_derivative(self.values, self.grid.dx, axis=0, order=order)

    def d_p(self, order: int = 1) -> np.ndarray:
        return spectral_derivative(self.values, self.grid.dp, axis=1, order=order)

    def moments(self, K: int) -> "MomentVector":
        """Per-slice moments ``A^0..A^K`` (shape ``(K+1, n_x)``)."""
        pk = self.grid.p[None, :] ** np.arange(K + 1)[:, None]
        return MomentVector(pk @ self.values.T * self.grid.dp)


@dataclass(frozen=True, eq=False)
class MomentVector:
    """Moments ``A^0..A^K``; a 2-D array holds one column per x-slice."""

    A: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", _frozen(self.A))

    @property
    def K(self) -> int:
        return self.A.shape[0] - 1

    def __getitem__(self, k: int):
        """Moment ``A^k``; negative indices return 0 rather than wrapping."""
        if k < 0:
            return np.zeros_like(self.A[0])
        return self.A[k]


@dataclass(frozen=True)
class GaussianProduct:
    """``amplitude * exp(-((x-x0)/x_width)**2 - ((p-p0)/p_width)**2)``."""

    amplitude: float
    x_width: float = 1.0
    p_width: float = 1.0
    x_center: float = 0.0
    p_center: float = 0.0

    def __post_init__(self):
        if not (self.x_width > 0 and self.p_width > 0):
            raise BadConfig("initial.widths: must be > 0")

    def evaluate(self, x: np.ndarray, p: np.ndarray) -> np.ndarray:
        ex = np.exp(-(((x - self.x_center) / self.x_width) ** 2))
        ep = np.exp(-(((p - self.p_center) / self.p_width) ** 2))
        return self.amplitude * np.outer(ex, ep)


@dataclass(frozen=True)
class DecayReport:
    passed: bool
    ratios: dict = field(default_factory=dict)
    decay_tol: float = DECAY_TOL


def make_grid(x_min, x_max, n_x, p_min, p_max, n_p) -> PhaseGrid:
    """Build a uniform left-closed grid; raises ``BadConfig`` on bad bounds."""
    for name, n in (("n_x", n_x), ("n_p", n_p)):
        if int(n) != n or n < 8:
            raise BadConfig(f"grid.{name}: must be an integer >= 8")
    for axis, lo, hi in (("x", x_min, x_max), ("p", p_min, p_max)):
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise BadConfig(f"grid.{axis}_min: bounds must be finite")
        if not hi > lo:
            raise BadConfig(f"grid.{axis}_max: must exceed {axis}_min")
    return PhaseGrid(float(x_min), float(x_max), int(n_x), float(p_min), float(p_max), int(n_p))


def p_grid(p_min: float, p_max: float, n_p: int) -> PhaseGrid:
    """Grid for single-slice work; the x-axis is a nominal 8-node stub."""
    return make_grid(-1.0, 1.0, 8, p_min, p_max, n_p)


def boundary_ratio(values: np.ndarray, axis: int = -1) -> float:
    """Largest magnitude on the outer 5% of nodes along ``axis`` over the peak."""
    arr = np.abs(np.asarray(values))
    peak = arr.max() if arr.size else 0.0
    if peak == 0.0:
        return 0.0
    n = arr.shape[axis]
    width = math.ceil(EDGE_FRACTION * n)
    edges = np.concatenate(
        [np.take(arr, np.arange(width), axis=axis), np.take(arr, np.arange(n - width, n), axis=axis)],
        axis=axis,
    )
    return float(edges.max() / peak)


def require_decay(values: np.ndarray, what: str, decay_tol: float = DECAY_TOL, axis: int = -1) -> None:
    ratio = boundary_ratio(values, axis)
    if ratio > decay_tol:
        raise UnderResolved(f"{what}: boundary ratio {ratio:.3e} exceeds {decay_tol:.1e}")


def decay_report(obj, decay_tol: float = DECAY_TOL) -> DecayReport:
    """Boundary-to-peak ratios per axis for a ``Profile``, ``Field`` or raw array."""
    values = obj.values if hasattr(obj, "values") else np.asarray(obj)
    if values.ndim == 1:
        ratios = {"p": boundary_ratio(values)}
    else:
        ratios = {"x": boundary_ratio(values, axis=0), "p": boundary_ratio(values, axis=1)}
    return DecayReport(all(r <= decay_tol for r in ratios.values()), ratios, decay_tol)


def sample_initial(spec, grid: PhaseGrid, decay_tol: float = DECAY_TOL) -> Field:
    """Sample an initial condition on ``grid``.

    ``spec`` may be ``None`` (zero field), a :class:`GaussianProduct`, a
    sequence of them (summed), or an ``(n_x, n_p)`` array of tabulated values.
    """
    if spec is None:
        values = np.zeros(grid.shape)
    elif isinstance(spec, GaussianProduct):
        values = spec.evaluate(grid.x, grid.p)
    elif isinstance(spec, np.ndarray):
        values = spec
    elif isinstance(spec, (list, tuple)):
        values = np.zeros(grid.shape)
        for term in spec:
            if not isinstance(term, GaussianProduct):
                raise BadConfig("initial: sum terms must be Gaussian products")
            values = values + term.evaluate(grid.x, grid.p)
    else:
        raise BadConfig(f"initial: unsupported spec {type(spec).__name__}")
    fld = Field(grid, values)
    report = decay_report(fld, decay_tol)
    if not report.passed:
        raise UnderResolved(f"initial: boundary ratios {report.ratios} exceed {decay_tol:.1e}")
    return fld


def _wavenumbers(n: int, spacing: float) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(n, spacing)


def spectral_derivative(values: np.ndarray, spacing: float, axis: int = -1, order: int = 1) -> np.ndarray:
    """Fourier derivative along ``axis``; the Nyquist mode is dropped for odd orders."""
    values = np.asarray(values)
    n = values.shape[axis]
    mult = (1j * _wavenumbers(n, spacing)) ** order
    if order % 2 and n % 2 == 0:
        mult[n // 2] = 0.0
    shape = [1] * values.ndim
    shape[axis] = n
    out = np.fft.ifft(np.fft.fft(values, axis=axis) * mult.reshape(shape), axis=axis)
    return out if np.iscomplexobj(values) else out.real


def integrate(values: np.ndarray, spacing: float, axis: int = -1):
    """Rectangle rule, which equals the trapezoid rule for decaying samples."""
    return np.sum(values, axis=axis) * spacing
