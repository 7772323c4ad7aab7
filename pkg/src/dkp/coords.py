"""Plane curve of a slice, Legendre-type canonical chart and flat coordinate.

Off-grid values of ``f`` and ``lambda`` are taken from the sinc interpolant of
the samples (and its exact principal-value integral), so Newton polishing of
inverse functions is not limited by the grid spacing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev
from scipy.interpolate import PchipInterpolator

from .errors import BadConfig, DegenerateDerivative, NoConvergence, NonMonotone
from .grid import Profile, spectral_derivative
from .singular import LambdaProfile, lambda_of, pv_eval, sinc_eval

__all__ = [
    "CurveSample",
    "SlopeSample",
    "CanonicalChart",
    "FlatCoordinate",
    "plane_curve",
    "slope_function",
    "canonical_chart",
    "envelope_residual",
    "flat_coordinate",
    "chebyshev_nodes",
]

DERIV_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class CurveSample:
    """Points ``(-pi f, -lambda)`` and tangents ``(-pi f', -lambda')`` at the nodes."""

    p: np.ndarray
    points: np.ndarray
    tangents: np.ndarray


@dataclass(frozen=True, eq=False)
class SlopeSample:
    """``m = lambda' / (pi f')`` where ``valid``; masked entries hold 0."""

    m: Profile
    valid: np.ndarray


@dataclass(frozen=True, eq=False)
class CanonicalChart:
    alpha: np.ndarray
    kappa: np.ndarray
    r: np.ndarray
    stationarity: np.ndarray
    stationary_points: list
    alpha0: float
    window: tuple


@dataclass(frozen=True, eq=False)
class FlatCoordinate:
    mu: np.ndarray
    w: np.ndarray
    round_trip: np.ndarray
    branch: tuple


class _Slice:
    """Sinc-interpolated evaluator for ``f``, ``lambda`` and their derivatives."""

    def __init__(self, f: Profile):
        self.f = f
        self.d1 = f.with_values(spectral_derivative(f.values, f.dp))
        self.d2 = f.with_values(spectral_derivative(f.values, f.dp, order=2))

    def fval(self, s):
        return sinc_eval(self.f, s)

    def fprime(self, s):
        return sinc_eval(self.d1, s)

    def fsecond(self, s):
        return sinc_eval(self.d2, s)

    def lam(self, s):
        return np.asarray(s) + pv_eval(self.f, s)

    def lam_prime(self, s):
        return 1.0 + pv_eval(self.d1, s)

    def lam_second(self, s):
        return pv_eval(self.d2, s)


def plane_curve(f: Profile, lam: LambdaProfile | None = None) -> CurveSample:
    lam = lambda_of(f) if lam is None else lam
    fp = spectral_derivative(f.values, f.dp)
    points = np.column_stack([-np.pi * f.values, -lam.values])
    tangents = np.column_stack([-np.pi * fp, -lam.prime])
    return CurveSample(np.array(f.p), points, tangents)


def slope_function(f: Profile, lam: LambdaProfile | None = None, deriv_floor: float = DERIV_FLOOR) -> SlopeSample:
    """Slope ``m`` on nodes where ``|f'| > deriv_floor * max|f'|``.

    Raises
    ------
    DegenerateDerivative
        If every node is masked.
    """
    lam = lambda_of(f) if lam is None else lam
    fp = spectral_derivative(f.values, f.dp)
    peak = np.abs(fp).max()
    valid = np.abs(fp) > deriv_floor * peak if peak > 0 else np.zeros(len(f), dtype=bool)
    if not valid.any():
        raise DegenerateDerivative("f' vanishes at every node")
    m = np.zeros(len(f))
    m[valid] = lam.prime[valid] / (np.pi * fp[valid])
    return SlopeSample(f.with_values(m), valid)


def chebyshev_nodes(lo: float, hi: float, n: int) -> np.ndarray:
    """Chebyshev points of the first kind on ``[lo, hi]``, increasing."""
    k = np.arange(n)
    nodes = np.cos(np.pi * (2 * k + 1) / (2 * n))[::-1]
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes


def _bisect(fn, a: float, b: float, tol: float = 1e-14, max_iter: int = 200) -> float:
    fa = fn(a)
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        fm = fn(mid)
        if fm == 0.0 or (b - a) < tol:
            return mid
        if np.sign(fm) == np.sign(fa):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def _stationary_points(ev: _Slice, lo: float, hi: float, alpha0: float, tol: float) -> list:
    """Points where both ``f'`` and ``lambda'`` vanish (sign-change scan plus bisection)."""
    f = ev.f
    inside = (f.p >= lo) & (f.p <= hi)
    nodes = f.p[inside]
    if len(nodes) < 2:
        return []
    fp = ev.d1.values[inside]
    lp = 1.0 + pv_eval(ev.d1, nodes)
    scale_f = max(np.abs(ev.d1.values).max(), 1e-300)
    scale_l = max(np.abs(lp).max(), 1e-300)
    out = []
    for i in range(len(nodes) - 1):
        if np.sign(fp[i]) != np.sign(fp[i + 1]) and np.sign(lp[i]) != np.sign(lp[i + 1]):
            root = _bisect(lambda s: float(ev.fprime(s)[0]), nodes[i], nodes[i + 1])
            if abs(ev.lam_prime(root)[0]) <= tol * scale_l and abs(ev.fprime(root)[0]) <= tol * scale_f:
                rj = -alpha0 * np.pi * ev.fval(root)[0] + ev.lam(root)[0]
                out.append({"p": float(root), "r": float(rj)})
    return out


def canonical_chart(
    f: Profile,
    lam: LambdaProfile | None,
    alpha,
    window: tuple,
    alpha0: float = 0.0,
    tol: float = 1e-12,
    max_newton: int = 50,
    deriv_floor: float = DERIV_FLOOR,
) -> CanonicalChart:
    """Legendre-type chart ``r(alpha) = -alpha pi f(kappa) + lambda(kappa)``.

    ``kappa(alpha)`` inverts the slope ``m`` on ``window = (p_lo, p_hi)``:
    a monotone cubic inverse supplies the start and Newton iteration on
    ``-alpha pi f'(kappa) + lambda'(kappa) = 0`` polishes it.

    Raises
    ------
    DegenerateDerivative
        If ``f'`` vanishes everywhere.
    NonMonotone
        If ``m`` is not strictly monotone on the window.
    BadConfig
        If some ``alpha`` lies outside ``m(window)``.
    NoConvergence
        If Newton polishing fails.
    """
    lam = lambda_of(f) if lam is None else lam
    slope = slope_function(f, lam, deriv_floor)
    lo, hi = window
    inside = (f.p >= lo) & (f.p <= hi)
    if not inside.any():
        raise BadConfig("window: contains no grid nodes")
    if not slope.valid[inside].all():
        raise NonMonotone("slope is undefined inside the window (f' vanishes)")
    p_win = f.p[inside]
    m_win = slope.m.values[inside]
    steps = np.diff(m_win)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise NonMonotone("slope is not strictly monotone on the window")
    order = np.argsort(m_win)
    inverse = PchipInterpolator(m_win[order], p_win[order])
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if alpha.min() < m_win.min() or alpha.max() > m_win.max():
        raise BadConfig("alpha: values must lie inside the slope range of the window")

    ev = _Slice(f)
    kappa = inverse(alpha)
    for _ in range(max_newton):
        g = -alpha * np.pi * ev.fprime(kappa) + ev.lam_prime(kappa)
        if np.max(np.abs(g)) <= tol:
            break
        dg = -alpha * np.pi * ev.fsecond(kappa) + ev.lam_second(kappa)
        kappa = kappa - g / dg
    else:
        raise NoConvergence("Newton polish of the slope inverse did not converge")
    stat = -alpha * np.pi * ev.fprime(kappa) + ev.lam_prime(kappa)
    r = -alpha * np.pi * ev.fval(kappa) + ev.lam(kappa)
    return CanonicalChart(
        alpha=alpha,
        kappa=kappa,
        r=r,
        stationarity=np.abs(stat),
        stationary_points=_stationary_points(ev, f.p.min(), f.p.max(), alpha0, 1e-8),
        alpha0=alpha0,
        window=(lo, hi),
    )


def envelope_residual(chart: CanonicalChart, f: Profile) -> float:
    """``max |dr/dalpha + pi f(kappa)|`` with ``dr/dalpha`` from a Chebyshev fit.

    Meaningful when ``chart.alpha`` are Chebyshev points (see :func:`chebyshev_nodes`).
    """
    a = chart.alpha
    fit = chebyshev.Chebyshev.fit(a, chart.r, deg=len(a) - 1, domain=[a.min(), a.max()])
    dr = fit.deriv()(a)
    fk = sinc_eval(f, chart.kappa)
    return float(np.max(np.abs(dr + np.pi * fk)))


def flat_coordinate(f: Profile, mu, branch: tuple, tol: float = 1e-13, max_newton: int = 50) -> FlatCoordinate:
    """Inverse ``w = f^{-1}(mu)`` on a strictly monotone branch ``(p_lo, p_hi)``.

    Raises
    ------
    NonMonotone
        If ``f`` is not strictly monotone on the branch.
    """
    lo, hi = branch
    inside = (f.p >= lo) & (f.p <= hi)
    p_b = f.p[inside]
    f_b = f.values[inside]
    if len(p_b) < 2:
        raise BadConfig("branch: contains fewer than two grid nodes")
    steps = np.diff(f_b)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise NonMonotone("f is not strictly monotone on the branch")
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if mu.min() < f_b.min() or mu.max() > f_b.max():
        raise BadConfig("mu: values must lie inside f(branch)")
    order = np.argsort(f_b)
    w = PchipInterpolator(f_b[order], p_b[order])(mu)
    ev = _Slice(f)
    for _ in range(max_newton):
        g = ev.fval(w) - mu
        if np.max(np.abs(g)) <= tol:
            break
        w = w - g / ev.fprime(w)
    else:
        raise NoConvergence("Newton polish of the flat coordinate did not converge")
    return FlatCoordinate(mu, w, np.abs(ev.fval(w) - mu), (lo, hi))
