"""Frobenius structure on a single slice ``f(p)``.

Tangent vectors of the form ``X(p) = h(p) f'(p)`` are stored by their
coefficient ``h`` so no formula ever divides by ``f'``. Kernels with a
``delta(p - q)`` part are represented by a smooth matrix plus a diagonal
multiplier; the delta part is always collapsed analytically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import digamma

from .grid import Profile, integrate, spectral_derivative
from .singular import LambdaProfile, lambda_of, pv_array

__all__ = [
    "TangentCoefficient",
    "RawVector",
    "KernelOperator",
    "eta_pair",
    "product",
    "kernel_of",
    "unity",
    "euler",
    "intersection_form",
    "intersection_via_euler",
    "log_convolution",
    "potential",
    "potential_gradient",
    "potential_identity_residual",
]


def _fd_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central differences, second order at the two end pairs."""
    out = np.gradient(values, h, edge_order=2)
    out[2:-2] = (values[:-4] - 8 * values[1:-3] + 8 * values[3:-1] - values[4:]) / (12 * h)
    return out


@dataclass(frozen=True, eq=False)
class TangentCoefficient:
    """Coefficient ``h`` of the tangent vector ``h * f'``.

    ``dh`` is the p-derivative of ``h``; it fixes the diagonal of the product
    kernel. When omitted it is estimated by finite differences (``h`` is
    typically a non-decaying polynomial, so Fourier differentiation is unsuitable).
    """

    h: Profile
    dh: np.ndarray | None = None

    def __post_init__(self):
        if self.dh is None:
            dh = _fd_derivative(self.h.values, self.h.dp)
        else:
            dh = np.array(self.dh, dtype=float)
        dh.setflags(write=False)
        object.__setattr__(self, "dh", dh)

    @classmethod
    def from_polynomial(cls, grid, coeffs) -> "TangentCoefficient":
        """Coefficient ``sum_i coeffs[i] * p**i`` with its exact derivative."""
        c = np.asarray(coeffs, dtype=float)[::-1]
        return cls(Profile(grid, np.polyval(c, grid.p)), np.polyval(np.polyder(c), grid.p))

    @property
    def values(self) -> np.ndarray:
        return self.h.values

    def raw(self, f: Profile) -> np.ndarray:
        """The vector ``h * f'`` itself."""
        return self.h.values * f.derivative().values


@dataclass(frozen=True, eq=False)
class RawVector:
    """A vector given by its values (not necessarily of the form ``h f'``)."""

    values: Profile


@dataclass(frozen=True, eq=False)
class KernelOperator:
    """``(K g)(p) = sum_q smooth[p, q] g(q) dp + diag(p) g(p)``."""

    smooth: np.ndarray
    diag: Profile

    def apply(self, g) -> np.ndarray:
        g = g.values if isinstance(g, Profile) else np.asarray(g)
        return self.smooth @ g * self.diag.dp + self.diag.values * g


def _difference_quotient(h: np.ndarray, dh: np.ndarray, p: np.ndarray) -> np.ndarray:
    gap = p[:, None] - p[None, :]
    np.fill_diagonal(gap, 1.0)
    dq = (h[:, None] - h[None, :]) / gap
    np.fill_diagonal(dq, dh)
    return dq


def eta_pair(X: TangentCoefficient, Y: TangentCoefficient, f: Profile) -> float:
    """Flat metric on coefficients: ``-int h_X h_Y f' dp``."""
    fp = f.derivative().values
    return float(-integrate(X.values * Y.values * fp, f.dp))


def product(X: TangentCoefficient, Y: TangentCoefficient, f: Profile, lam: LambdaProfile | None = None) -> TangentCoefficient:
    """Coefficient of the algebra product ``X o Y``.

    ``h_Z(p) = int DQ[h_X](p, q) h_Y(q) f'(q) dq + h_Y(p) (pv(h_X f')(p) - h_X(p) lambda'(p))``
    with ``DQ[h](p, q) = (h(p) - h(q)) / (p - q)``. The derivative of ``h_Z``
    is returned alongside, from the equivalent all-principal-value form

    ``h_Z = h_X P[h_Y f'] + h_Y P[h_X f'] - P[h_X h_Y f'] - h_X h_Y lambda'``.
    """
    lam = lambda_of(f) if lam is None else lam
    p, dp = f.p, f.dp
    fp = spectral_derivative(f.values, dp)
    fpp = spectral_derivative(f.values, dp, order=2)
    lp = lam.prime
    hx, dx = X.values, X.dh
    hy, dy = Y.values, Y.dh

    dq = _difference_quotient(hx, dx, p)
    hz = dq @ (hy * fp) * dp + hy * (pv_array(hx * fp) - hx * lp)

    dz = (
        dx * pv_array(hy * fp)
        + hx * pv_array(dy * fp + hy * fpp)
        + dy * pv_array(hx * fp)
        + hy * pv_array(dx * fp + hx * fpp)
        - pv_array(dx * hy * fp + hx * dy * fp + hx * hy * fpp)
        - (dx * hy + hx * dy) * lp
        - hx * hy * pv_array(fpp)
    )
    return TangentCoefficient(f.with_values(hz), dz)


def kernel_of(X: TangentCoefficient, f: Profile, lam: LambdaProfile | None = None) -> KernelOperator:
    """Operator ``V_X`` acting on raw vectors: ``V_X(h_Y f') = h_{X o Y} f'``."""
    lam = lambda_of(f) if lam is None else lam
    fp = spectral_derivative(f.values, f.dp)
    hx = X.values
    smooth = _difference_quotient(hx, X.dh, f.p) * fp[:, None]
    diag = pv_array(hx * fp) - hx * lam.prime
    return KernelOperator(smooth, f.with_values(diag))


def unity(f: Profile) -> TangentCoefficient:
    """Unit of the algebra, coefficient ``-1`` (the vector ``-f'``)."""
    return TangentCoefficient(f.with_values(-np.ones(len(f))), np.zeros(len(f)))


def euler(f: Profile) -> RawVector:
    """Euler vector ``f - p f'``."""
    return RawVector(f.with_values(f.values - f.p * f.derivative().values))


def _covector(a, f: Profile) -> np.ndarray:
    a = a.values if isinstance(a, Profile) else a
    return np.broadcast_to(np.asarray(a, dtype=float), f.p.shape)


def intersection_form(a, b, f: Profile, lam: LambdaProfile | None = None) -> float:
    """Second metric contracted with covectors ``a`` and ``b``.

    Kernel ``f'(p) f'(q) - (f(p) f'(q) - f(q) f'(p)) / (p - q)`` plus the
    collapsed diagonal part ``f lambda' - f' lambda``. The quotient's diagonal
    limit is ``f'^2 - f f''``.
    """
    lam = lambda_of(f) if lam is None else lam
    a, b = _covector(a, f), _covector(b, f)
    p, dp = f.p, f.dp
    fv = f.values
    fp = spectral_derivative(fv, dp)
    fpp = spectral_derivative(fv, dp, order=2)
    gap = p[:, None] - p[None, :]
    np.fill_diagonal(gap, 1.0)
    quot = (fv[:, None] * fp[None, :] - fv[None, :] * fp[:, None]) / gap
    np.fill_diagonal(quot, fp**2 - fv * fpp)
    kern = fp[:, None] * fp[None, :] - quot
    smooth = a @ kern @ b * dp * dp
    local = integrate(a * b * (fv * lam.prime - fp * lam.values), dp)
    return float(smooth + local)


def intersection_via_euler(a, b, f: Profile, lam: LambdaProfile | None = None) -> float:
    """Second metric assembled from the Euler vector, the product and the flat metric.

    Kernel ``(f'(p) E(q) - f'(q) E(p)) / (p - q)`` plus the diagonal part
    ``lambda' E - f' pv(E)``; the quotient's diagonal limit is ``f'' E - f' E'``.
    """
    lam = lambda_of(f) if lam is None else lam
    a, b = _covector(a, f), _covector(b, f)
    p, dp = f.p, f.dp
    fp = spectral_derivative(f.values, dp)
    fpp = spectral_derivative(f.values, dp, order=2)
    e = euler(f).values.values
    ep = spectral_derivative(e, dp)
    gap = p[:, None] - p[None, :]
    np.fill_diagonal(gap, 1.0)
    quot = (fp[:, None] * e[None, :] - fp[None, :] * e[:, None]) / gap
    np.fill_diagonal(quot, fpp * e - fp * ep)
    smooth = a @ quot @ b * dp * dp
    local = integrate(a * b * (lam.prime * e - fp * pv_array(e)), dp)
    return float(smooth + local)


def _log_weights(n: int, h: float) -> np.ndarray:
    k = np.arange(n)
    gap = np.abs(k[:, None] - k[None, :]).astype(float)
    np.fill_diagonal(gap, 1.0)
    w = h * np.log(h * gap)
    np.fill_diagonal(w, h * np.log(h / (2 * np.pi)))
    return w


def log_convolution(values: np.ndarray, h: float) -> np.ndarray:
    """``int log|p - q| u(q) dq`` at the nodes for decaying samples ``u``.

    Punctured trapezoid rule plus a diagonal term and a Fourier-space
    correction. The correction multiplier
    ``-gamma - (psi(1 + s) + psi(1 - s)) / 2`` with ``s = h omega / (2 pi)``
    makes the rule exact for the sinc interpolant of the samples.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    s = np.fft.fftfreq(n)
    mult = -np.euler_gamma - 0.5 * (digamma(1 + s) + digamma(1 - s))
    corr = np.fft.ifft(np.fft.fft(values, axis=-1) * mult, axis=-1).real
    return values @ _log_weights(n, h).T + h * corr


def potential(f: Profile) -> float:
    """``F = 1/2 int int log|p - q| f(p) f(q) + 1/2 int p^2 f``."""
    fv = f.values
    logpart = 0.5 * integrate(fv * log_convolution(fv, f.dp), f.dp)
    return float(logpart + 0.5 * integrate(f.p**2 * fv, f.dp))


def potential_gradient(f: Profile) -> np.ndarray:
    """Variational derivative ``int log|p - q| f(q) dq + p^2 / 2``."""
    return log_convolution(f.values, f.dp) + 0.5 * f.p**2


def potential_identity_residual(f: Profile, lam: LambdaProfile | None = None, trim: float = 0.1) -> float:
    """Relative mismatch between ``d/dp dF/df`` and ``lambda`` on the interior.

    The p-derivative of the gradient is taken under the integral sign,
    ``d/dp int log|p - q| f(q) dq = int log|p - q| f'(q) dq``, so it runs
    through the logarithmic rule rather than the Hilbert transform. The outer
    ``trim`` fraction of nodes on each side is excluded.
    """
    lam = lambda_of(f) if lam is None else lam
    fp = spectral_derivative(f.values, f.dp)
    slope = log_convolution(fp, f.dp) + f.p
    n = len(f)
    cut = int(np.ceil(trim * n))
    inner = slice(cut, n - cut)
    diff = slope[inner] - lam.values[inner]
    return float(np.linalg.norm(diff) / np.linalg.norm(lam.values[inner]))
