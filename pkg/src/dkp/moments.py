"""Moments of a slice and the two hydrodynamic metrics in moment coordinates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadConfig
from .frobenius import intersection_form
from .grid import DECAY_TOL, MomentVector, Profile, integrate, require_decay, spectral_derivative
from .singular import LambdaProfile, lambda_of

__all__ = [
    "MomentMetricEntry",
    "moments",
    "km_metric",
    "g_metric_moments",
    "eta_kernel_moment",
    "g_kernel_moment",
    "metric_bridge",
]


@dataclass(frozen=True)
class MomentMetricEntry:
    k: int
    n: int
    value: float


def moments(f: Profile, K: int, decay_tol: float = DECAY_TOL) -> MomentVector:
    """``A^k = int p^k f dp`` for ``k = 0..K``."""
    if K < 0:
        raise BadConfig("K: must be >= 0")
    require_decay(f.p**K * f.values, f"p^{K} f", decay_tol)
    powers = f.p[None, :] ** np.arange(K + 1)[:, None]
    return MomentVector(integrate(powers * f.values, f.dp))


def _check_index(A: MomentVector, k: int, n: int, top: int) -> None:
    if k < 0 or n < 0:
        raise BadConfig("index: must be >= 0")
    if top > A.K:
        raise BadConfig(f"index: needs A^{top} but only K={A.K} moments are available")


def km_metric(A: MomentVector, k: int, n: int) -> float:
    """First metric ``(k + n) A^{k+n-1}``."""
    _check_index(A, k, n, k + n - 1)
    return (k + n) * A[k + n - 1]


def g_metric_moments(A: MomentVector, k: int, n: int) -> float:
    """Second metric in moment coordinates, including both finite sums.

    ``A^{-1}`` never contributes because every term that would use it carries
    a vanishing coefficient.
    """
    _check_index(A, k, n, k + n)
    value = k * n * A[k - 1] * A[n - 1] + (k + n + 2) * A[k + n]
    value += sum((k + i) * A[k + i - 1] * A[n - i - 1] for i in range(n))
    value -= sum((n - i - 1) * A[k + i] * A[n - i - 2] for i in range(n - 1))
    return value


def eta_kernel_moment(f: Profile, k: int, n: int) -> float:
    """First metric contracted with ``p^k`` and ``q^n``: ``-int p^{k+n} f' dp``."""
    fp = spectral_derivative(f.values, f.dp)
    return float(-integrate(f.p ** (k + n) * fp, f.dp))


def g_kernel_moment(f: Profile, k: int, n: int, lam: LambdaProfile | None = None) -> float:
    """Second metric contracted with ``p^k`` and ``q^n`` by kernel quadrature."""
    return intersection_form(f.p**k, f.p**n, f, lam)


def metric_bridge(f: Profile, k: int, n: int, lam: LambdaProfile | None = None) -> tuple[float, float]:
    """Absolute differences (first, second) between kernel and moment evaluations."""
    if max(k, n) > 3:
        raise BadConfig("index: bridge checks are limited to k, n <= 3")
    lam = lambda_of(f) if lam is None else lam
    A = moments(f, k + n)
    eta_res = abs(eta_kernel_moment(f, k, n) - km_metric(A, k, n))
    g_res = abs(g_kernel_moment(f, k, n, lam) - g_metric_moments(A, k, n))
    return float(eta_res), float(g_res)
