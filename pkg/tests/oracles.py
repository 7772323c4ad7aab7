"""Reference values computed without the lattice Hilbert transform.

Everything here works on callables and uses either closed forms, special
functions or adaptive quadrature, so agreement with the library is evidence
that two unrelated routes produce the same number.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, optimize, special


def pv_offset_midpoint(func, p: float, step: float = 0.01, reach: float = 14.0) -> float:
    """``pv int func(q) / (p - q) dq`` by the midpoint rule on the symmetrised integrand.

    Pairs ``q = p -+ s`` with ``s = (j + 1/2) step`` so the singular parts cancel;
    ``(func(p - s) - func(p + s)) / s`` is smooth and even in ``s``, so the rule
    is spectrally accurate.
    """
    s = (np.arange(int(reach / step)) + 0.5) * step
    return float(np.sum((func(p - s) - func(p + s)) / s) * step)


def lambda_gaussian(p) -> np.ndarray:
    """``p + pv int exp(-q^2) / (p - q) dq = p + 2 sqrt(pi) D(p)``."""
    p = np.asarray(p, dtype=float)
    return p + 2.0 * np.sqrt(np.pi) * special.dawsn(p)


def hilbert_gaussian(p) -> np.ndarray:
    """Lattice-convention Hilbert transform of ``exp(-p^2)``: ``-2 D(p) / sqrt(pi)``."""
    return -2.0 * special.dawsn(np.asarray(p, dtype=float)) / np.sqrt(np.pi)


def log_potential_quad(func, reach: float = 9.0) -> float:
    """``1/2 int int log|p - q| f(p) f(q) + 1/2 int p^2 f`` by nested adaptive quadrature.

    The inner integral is split at ``q = p`` and each half uses the algebraic-
    logarithmic endpoint weight of QUADPACK, so the singularity is integrated
    exactly by the weight rather than sampled.
    """

    def inner(p):
        left = integrate.quad(func, p - reach, p, weight="alg-logb", wvar=(0, 0), limit=200, epsabs=1e-14)[0]
        right = integrate.quad(func, p, p + reach, weight="alg-loga", wvar=(0, 0), limit=200, epsabs=1e-14)[0]
        return left + right

    double = integrate.quad(lambda p: func(p) * inner(p), -reach, reach, limit=200, epsabs=1e-13, epsrel=1e-12)[0]
    quadratic = integrate.quad(lambda p: p * p * func(p), -reach, reach, epsabs=1e-14, epsrel=1e-13)[0]
    return 0.5 * double + 0.5 * quadratic


def log_potential_gaussian() -> float:
    """Closed form of the potential for ``f = exp(-p^2)``."""
    return -np.pi * (np.euler_gamma + np.log(2.0)) / 4.0 + np.sqrt(np.pi) / 4.0


def product_pv_form(hx, hy, fprime, lam_prime, p: float) -> float:
    """Product coefficient ``h_X P[h_Y f'] + h_Y P[h_X f'] - P[h_X h_Y f'] - h_X h_Y lambda'`` at ``p``.

    ``P`` is the principal value integral evaluated by :func:`pv_offset_midpoint`.
    """
    P = lambda g: pv_offset_midpoint(g, p)
    a, b = hx(np.array([p]))[0], hy(np.array([p]))[0]
    return (
        a * P(lambda q: hy(q) * fprime(q))
        + b * P(lambda q: hx(q) * fprime(q))
        - P(lambda q: hx(q) * hy(q) * fprime(q))
        - a * b * lam_prime(p)
    )


def hodograph_log_solution(x: float, y: float, t: float) -> tuple:
    """Exact solution for ``k = mu (log|mu| - 1)`` with ``t < 0``.

    ``f = -exp(x + y p + t (p^2 + 2 a))`` where ``a = A^0`` solves
    ``a = -C exp(x + 2 t a)`` with ``C = sqrt(pi / -t) exp(-y^2 / (4 t))``.
    Returns ``(callable f, a)``; the root nearest 0 is taken.
    """
    if not t < 0:
        raise ValueError("closed form needs t < 0")
    c = math.sqrt(math.pi / -t) * math.exp(-(y**2) / (4 * t))
    g = lambda a: a + c * math.exp(x + 2 * t * a)
    a = optimize.brentq(g, -1.0, 0.0, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    return (lambda p: -np.exp(x + y * p + t * (p**2 + 2 * a))), a


def hodograph_linear_gaussian(x: float, y: float, t: float, big: float):
    """Leading-order solution for ``k = (big/2) mu^2 exp(nu^2/4)`` as ``big`` grows.

    ``f = exp(-p^2/4) (x + y p + t p^2 + 2 t a) / big`` with
    ``a = (x m0 + t m2) / (big - 2 t m0)``, ``m0 = 2 sqrt(pi)``, ``m2 = 4 sqrt(pi)``.
    The relative error is ``O(1/big)``.
    """
    m0, m2 = 2 * np.sqrt(np.pi), 4 * np.sqrt(np.pi)
    a = (x * m0 + t * m2) / (big - 2 * t * m0)
    return lambda p: np.exp(-(p**2) / 4) * (x + y * p + t * p**2 + 2 * t * a) / big
