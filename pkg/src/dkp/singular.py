"""Hilbert transform, principal-value integrals and the Lax function.

Conventions
-----------
``hilbert(u)(p) = (1/pi) PV int u(q) / (q - p) dq`` and
``pv_integral(u)(p) = PV int u(q) / (p - q) dq = -pi * hilbert(u)(p)``.

The transform is the exact Hilbert transform of the sinc interpolant of the
samples, evaluated at the nodes. On a lattice of spacing ``h`` this is the
discrete convolution

    hilbert(u)_k = sum_l u_l * 2 / (pi (l - k)),   l - k odd,

which is computed with a zero-padded FFT (an exact linear convolution, so no
periodic wrap-around). Band-limited decaying inputs such as Gaussians are
transformed to round-off.

A transform decays only like ``1/p``, so transforming it again from its
windowed samples would lose the part outside the window. Results therefore
carry an ``exterior`` generator, and a second transform adds the exact
contribution of the out-of-window lattice nodes in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import digamma, polygamma

from .errors import BadConfig
from .grid import DECAY_TOL, Profile, require_decay, spectral_derivative

__all__ = [
    "LambdaProfile",
    "RHPair",
    "hilbert",
    "hilbert_array",
    "pv_integral",
    "pv_array",
    "pv_matrix",
    "lambda_of",
    "lambda_arrays",
    "tricomi_residual",
    "rh_pair",
    "cauchy_extension",
    "sinc_eval",
    "pv_eval",
]


@lru_cache(maxsize=16)
def _kernel_spectrum(n: int) -> np.ndarray:
    """rFFT of the circular lattice kernel for a length-``2n`` linear convolution."""
    m = np.arange(-(n - 1), n)
    taps = np.where(m % 2 != 0, 2.0 / (np.pi * np.where(m == 0, 1, m)), 0.0)
    circ = np.zeros(2 * n)
    circ[m % (2 * n)] = -taps
    spec = np.fft.rfft(circ)
    spec.setflags(write=False)
    return spec


def _side_sum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``sum_{i>=0} 1 / ((a + 2i)(b + 2i))`` for positive odd ``a``, ``b``."""
    a = a.astype(float)
    b = b.astype(float)
    equal = a == b
    gap = np.where(equal, 1.0, b - a)
    off = (digamma(b / 2) - digamma(a / 2)) / (2 * gap)
    return np.where(equal, 0.25 * polygamma(1, a / 2), off)


@lru_cache(maxsize=8)
def exterior_correction(n: int) -> np.ndarray:
    """Matrix adding the out-of-window lattice nodes to a repeated transform.

    Entry ``(k, l)`` is ``sum_{j outside window} t_{k-j} t_{j-l}`` with
    ``t_m = -2/(pi m)`` for odd ``m``; only ``k = l (mod 2)`` couples.
    """
    k = np.arange(n)[:, None]
    l = np.arange(n)[None, :]
    first_right = n + ((n - (k + 1)) % 2)
    first_left = -1 - ((-1 - (k + 1)) % 2)
    right = _side_sum(first_right - k, first_right - l)
    left = _side_sum(k - first_left, l - first_left)
    out = np.where((k - l) % 2 == 0, -(4.0 / np.pi**2) * (right + left), 0.0)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=8)
def pv_matrix(n: int) -> np.ndarray:
    """Dense node-to-node principal-value operator: ``pv_array(u) == pv_matrix(n) @ u``."""
    d = np.arange(n)[:, None] - np.arange(n)[None, :]
    out = np.where(d % 2 != 0, 2.0 / np.where(d == 0, 1, d), 0.0)
    out.setflags(write=False)
    return out


def hilbert_array(values: np.ndarray, exterior: np.ndarray | None = None) -> np.ndarray:
    """Lattice Hilbert transform along the last axis (batched)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    out = np.fft.irfft(np.fft.rfft(values, 2 * n, axis=-1) * _kernel_spectrum(n), 2 * n, axis=-1)[..., :n]
    if exterior is not None:
        out = out + np.asarray(exterior) @ exterior_correction(n).T
    return out


def pv_array(values: np.ndarray, exterior: np.ndarray | None = None) -> np.ndarray:
    """``PV int u(q)/(p-q) dq`` along the last axis (batched)."""
    return -np.pi * hilbert_array(values, exterior)


def hilbert(profile: Profile, decay_tol: float = DECAY_TOL) -> Profile:
    """Hilbert transform of a resolved profile.

    Raises
    ------
    UnderResolved
        If the input neither decays at the window edges nor carries an
        exterior generator.
    """
    if profile.exterior is None:
        require_decay(profile.values, "hilbert input", decay_tol)
        exterior = profile.values
    else:
        exterior = None
    return profile.with_values(hilbert_array(profile.values, profile.exterior), exterior)


def pv_integral(u: Profile, decay_tol: float = DECAY_TOL) -> Profile:
    """``PV int u(q)/(p-q) dq`` at every node; equals ``-pi * hilbert(u)``."""
    h = hilbert(u, decay_tol)
    ext = None if h.exterior is None else -np.pi * h.exterior
    return h.with_values(-np.pi * h.values, ext)


@dataclass(frozen=True, eq=False)
class LambdaProfile:
    """Lax function samples and their p-derivative."""

    base: Profile
    derivative: Profile

    @property
    def values(self) -> np.ndarray:
        return self.base.values

    @property
    def prime(self) -> np.ndarray:
        return self.derivative.values


def lambda_arrays(f: np.ndarray, dp: float, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched ``(lambda, lambda')`` for samples of ``f`` along the last axis."""
    fp = spectral_derivative(f, dp)
    return p + pv_array(f), 1.0 + pv_array(fp)


def lambda_of(f: Profile, decay_tol: float = DECAY_TOL) -> LambdaProfile:
    """``lambda = p + pv(f)`` and ``lambda' = 1 + pv(f')``."""
    require_decay(f.values, "lambda_of input", decay_tol)
    lam, lam_p = lambda_arrays(f.values, f.dp, f.p)
    return LambdaProfile(f.with_values(lam), f.with_values(lam_p))


def tricomi_residual(phi1: Profile, phi2: Profile, relative: bool = False) -> float:
    """L2 norm of ``H[a H b + (H a) b] - (H a H b - a b)``.

    With ``relative=True`` the norm is divided by the larger of
    ``||H a H b||`` and ``||a b||``.
    """
    a, b = phi1.values, phi2.values
    ha = hilbert(phi1).values
    hb = hilbert(phi2).values
    lhs = hilbert_array(a * hb + ha * b)
    rhs = ha * hb - a * b
    res = np.sqrt(np.sum((lhs - rhs) ** 2) * phi1.dp)
    if not relative:
        return float(res)
    scale = max(np.linalg.norm(ha * hb), np.linalg.norm(a * b)) * np.sqrt(phi1.dp)
    return float(res / scale) if scale > 0 else float(res)


@dataclass(frozen=True, eq=False)
class RHPair:
    """Boundary values ``plus = -pi f - i lambda`` and ``minus = pi f - i lambda``."""

    plus: Profile
    minus: Profile


def rh_pair(f: Profile) -> RHPair:
    lam = lambda_of(f).values
    return RHPair(
        f.with_values(-np.pi * f.values - 1j * lam),
        f.with_values(np.pi * f.values - 1j * lam),
    )


def _scaled_offsets(grid_p: np.ndarray, dp: float, s) -> np.ndarray:
    s = np.atleast_1d(np.asarray(s))
    return (s[:, None] - grid_p[None, :]) / dp


def cauchy_extension(f: Profile, z: complex) -> complex:
    """``int f(q) / (z - q) dq`` for ``z`` off the real axis.

    The integral is taken over the sinc interpolant of the samples, for which
    it has the closed form ``sum_l f_l (1 - exp(+-i pi s_l)) / s_l`` with
    ``s_l = (z - p_l)/h`` (upper sign for ``Im z > 0``). This stays accurate
    arbitrarily close to the axis, where plain quadrature would not.
    """
    z = complex(z)
    if z.imag == 0.0:
        raise BadConfig("z: must lie off the real axis")
    s = (z - f.p) / f.dp
    sign = 1.0 if z.imag > 0 else -1.0
    with np.errstate(over="ignore", invalid="ignore"):
        weights = -np.expm1(sign * 1j * np.pi * s) / s
    return complex(np.sum(f.values * weights))


def sinc_eval(f: Profile, s) -> np.ndarray:
    """Sinc interpolant of the samples at arbitrary points ``s``."""
    return np.sinc(_scaled_offsets(f.p, f.dp, s)) @ f.values


def pv_eval(f: Profile, s) -> np.ndarray:
    """``PV int f(q)/(s-q) dq`` of the sinc interpolant at arbitrary points ``s``.

    Agrees with :func:`pv_array` at the nodes.
    """
    t = _scaled_offsets(f.p, f.dp, s)
    small = np.abs(t) < 1e-8
    safe = np.where(small, 1.0, t)
    w = np.where(small, 0.5 * np.pi**2 * t, (1.0 - np.cos(np.pi * safe)) / safe)
    return w @ f.values
