"""Implicit solutions from the extremal condition

    x + y p + t (p^2 + 2 A0) = dK/df(p),   K = int k(f, lambda) dp,

with ``dK/df = k_1(f, lambda) - pv(k_2(f, lambda))`` (subscripts are partial
derivatives in the first and second slot). A solution ``f(p; x, y, t)`` is a
simultaneous solution of the Benney flow in ``y`` and the second flow in ``t``.

The equation is solved by damped Newton iteration with a dense analytic
Jacobian. Convergence is measured in the weighted norm ``||(|f| + eps) r||``,
which concentrates on the support of ``f``: on a truncated grid the left side
grows like ``p^2`` and the pointwise identity is only meaningful where ``f`` is
not negligible.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BadConfig, NoConvergence, SingularJacobian
from .grid import Profile, integrate, spectral_derivative
from .singular import pv_array, pv_matrix

__all__ = [
    "MuFactor",
    "NuFactor",
    "SeparableTerm",
    "KDensity",
    "TabulatedK",
    "SolverOptions",
    "HodographProblem",
    "HodographSolution",
    "hodograph_residual",
    "weighted_norm",
    "jacobian",
    "functional_value",
    "functional_derivative",
    "solve_point",
    "solve",
    "flow_invariance_residuals",
]


@dataclass(frozen=True)
class MuFactor:
    """Dependence on ``mu = f``: ``"power"`` (``mu**m``) or ``"xlogx"`` (``mu (log|mu| - 1)``)."""

    kind: str = "power"
    m: int = 1

    def __post_init__(self):
        if self.kind not in ("power", "xlogx"):
            raise BadConfig(f"k.mu.kind: unknown factor {self.kind!r}")
        if self.kind == "power" and (int(self.m) != self.m or self.m < 1):
            raise BadConfig("k.mu.m: must be an integer >= 1 so that k(0, nu) = 0")

    def derivatives(self, mu: np.ndarray):
        if self.kind == "xlogx":
            log = np.log(np.abs(mu))
            return mu * (log - 1.0), log, 1.0 / mu
        m = self.m
        d2 = m * (m - 1) * mu ** (m - 2) if m >= 2 else np.zeros_like(mu)
        return mu**m, m * mu ** (m - 1), d2


@dataclass(frozen=True)
class NuFactor:
    """Dependence on ``nu = lambda``: ``"power"`` (``nu**n / n!``) or ``"gauss"`` (``exp(c nu^2)``)."""

    kind: str = "power"
    n: int = 0
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in ("power", "gauss"):
            raise BadConfig(f"k.nu.kind: unknown factor {self.kind!r}")
        if self.kind == "power" and (int(self.n) != self.n or self.n < 0):
            raise BadConfig("k.nu.n: must be an integer >= 0")

    def derivatives(self, nu: np.ndarray):
        if self.kind == "gauss":
            b = np.exp(self.c * nu**2)
            return b, 2 * self.c * nu * b, (2 * self.c + 4 * self.c**2 * nu**2) * b
        n = self.n

        def mono(j):
            if j < 0:
                return np.zeros_like(nu)
            return nu**j / math.factorial(j)

        return mono(n), mono(n - 1), mono(n - 2)


@dataclass(frozen=True)
class SeparableTerm:
    """``coeff * a(mu) * b(nu)``."""

    coeff: float
    mu: MuFactor
    nu: NuFactor


@dataclass(frozen=True)
class KDensity:
    """Sum of separable terms; evaluates ``k`` and its partials up to order two."""

    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise BadConfig("k.terms: at least one term is required")

    @property
    def has_log(self) -> bool:
        return any(t.mu.kind == "xlogx" for t in self.terms)

    def partials(self, mu: np.ndarray, nu: np.ndarray) -> dict:
        out = {key: np.zeros_like(mu) for key in ("k", "k1", "k2", "k11", "k12", "k22")}
        for term in self.terms:
            a, a1, a2 = term.mu.derivatives(mu)
            b, b1, b2 = term.nu.derivatives(nu)
            c = term.coeff
            out["k"] += c * a * b
            out["k1"] += c * a1 * b
            out["k2"] += c * a * b1
            out["k11"] += c * a2 * b
            out["k12"] += c * a1 * b1
            out["k22"] += c * a * b2
        return out


@dataclass(frozen=True)
class TabulatedK:
    """User-supplied ``k`` with callables for ``k`` and its first and second partials."""

    k: Callable
    k1: Callable
    k2: Callable
    k11: Callable
    k12: Callable
    k22: Callable
    has_log: bool = False

    def partials(self, mu: np.ndarray, nu: np.ndarray) -> dict:
        return {name: np.asarray(getattr(self, name)(mu, nu), dtype=float) for name in ("k", "k1", "k2", "k11", "k12", "k22")}


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 60
    tol: float = 1e-8
    eps: float = 1e-8
    armijo: float = 1e-4
    min_step: float = 1e-10
    relaxation: float = 0.1
    fallback_iter: int = 200
    cond_limit: float = 1e14

    def __post_init__(self):
        for name in ("max_iter", "tol", "eps", "min_step", "relaxation", "fallback_iter"):
            if not getattr(self, name) > 0:
                raise BadConfig(f"solver.{name}: must be > 0")


@dataclass(frozen=True)
class HodographProblem:
    """Density ``k``, one or more spacetime points and an initial guess.

    ``log_variable`` selects iteration in ``log|f|`` with fixed sign; by default
    it is used whenever ``k`` contains a logarithmic term, since such densities
    force a sign-definite solution.
    """

    k_spec: KDensity | TabulatedK
    points: tuple
    initial: Profile
    options: SolverOptions = field(default_factory=SolverOptions)
    warm_start: bool = True
    log_variable: bool | None = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[1] != 3:
            raise BadConfig("points: each point must be (x, y, t)")
        object.__setattr__(self, "points", tuple(tuple(map(float, row)) for row in pts))


@dataclass
class HodographSolution:
    points: tuple
    profiles: list
    residuals: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    messages: list
    inertia: list


def _lambda(f: np.ndarray, p: np.ndarray) -> np.ndarray:
    return p + pv_array(f)


def functional_derivative(f: Profile, k_spec) -> np.ndarray:
    """``dK/df = k_1(f, lambda) - pv(k_2(f, lambda))``."""
    d = k_spec.partials(f.values, _lambda(f.values, f.p))
    return d["k1"] - pv_array(d["k2"])


def hodograph_residual(f: Profile, x: float, y: float, t: float, k_spec) -> Profile:
    """Raw residual ``x + y p + t (p^2 + 2 A0) - dK/df``."""
    a0 = integrate(f.values, f.dp)
    lhs = x + y * f.p + t * (f.p**2 + 2 * a0)
    return f.with_values(lhs - functional_derivative(f, k_spec))


def weighted_norm(f: Profile, r, eps: float = 1e-8) -> float:
    r = r.values if isinstance(r, Profile) else r
    w = np.abs(f.values) + eps
    return float(np.sqrt(np.sum((w * r) ** 2) * f.dp))


def jacobian(f: Profile, x: float, y: float, t: float, k_spec) -> np.ndarray:
    """Dense ``d r(p) / d f(q)`` (symmetric).

    ``2 t dp 1 1^T - diag(k11) - diag(k12) M + M diag(k12) + M diag(k22) M``
    with ``M`` the node-to-node principal-value matrix.
    """
    n = len(f)
    d = k_spec.partials(f.values, _lambda(f.values, f.p))
    m = pv_matrix(n)
    jac = np.full((n, n), 2.0 * t * f.dp)
    jac[np.diag_indices(n)] -= d["k11"]
    jac -= d["k12"][:, None] * m
    jac += m * d["k12"][None, :]
    jac += (m * d["k22"][None, :]) @ m
    return jac


def functional_value(f: Profile, x: float, y: float, t: float, k_spec) -> float:
    """Slice density ``A0 x + A1 y + (A2 + A0^2) t - K[f]``."""
    p, fv = f.p, f.values
    a0 = integrate(fv, f.dp)
    a1 = integrate(p * fv, f.dp)
    a2 = integrate(p**2 * fv, f.dp)
    kval = integrate(k_spec.partials(fv, _lambda(fv, p))["k"], f.dp)
    return float(a0 * x + a1 * y + (a2 + a0**2) * t - kval)


def _use_log(problem: HodographProblem) -> bool:
    if problem.log_variable is not None:
        return problem.log_variable
    return bool(getattr(problem.k_spec, "has_log", False))


def solve_point(
    k_spec,
    x: float,
    y: float,
    t: float,
    initial: Profile,
    options: SolverOptions = SolverOptions(),
    log_variable: bool = False,
) -> tuple[Profile, int, float]:
    """Newton solve at one point; returns ``(f, iterations, weighted residual)``.

    Raises
    ------
    NoConvergence
        If the iteration budget is exhausted or the line search stalls.
    SingularJacobian
        If the Newton system is singular and the relaxation fallback fails.
    """
    f0 = initial.values
    if log_variable:
        sign = np.sign(f0)
        if not (np.all(sign == sign[0]) and sign[0] != 0):
            raise BadConfig("initial: logarithmic densities need a sign-definite initial guess")
        sign = float(sign[0])
        to_f = lambda v: sign * np.exp(v)
        z = np.log(np.abs(f0))
    else:
        to_f = lambda v: v
        z = np.array(f0, dtype=float)

    def state(v):
        prof = initial.with_values(to_f(v))
        r = hodograph_residual(prof, x, y, t, k_spec).values
        return prof, r

    prof, r = state(z)
    for it in range(options.max_iter + 1):
        wnorm = weighted_norm(prof, r, options.eps)
        if wnorm <= options.tol:
            return prof, it, wnorm
        if it == options.max_iter:
            break
        jac = jacobian(prof, x, y, t, k_spec)
        if log_variable:
            jac = jac * prof.values[None, :]
        try:
            if not np.isfinite(jac).all() or np.linalg.cond(jac) > options.cond_limit:
                raise np.linalg.LinAlgError("ill-conditioned")
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            z, prof, r = _relaxation(z, prof, r, jac, state, options)
            continue
        merit = np.linalg.norm(r)
        alpha = 1.0
        while True:
            with np.errstate(over="ignore", invalid="ignore"):
                trial = z + alpha * step
                if np.all(np.isfinite(to_f(trial))):
                    tprof, tr = state(trial)
                    if np.all(np.isfinite(tr)) and np.linalg.norm(tr) <= (1 - options.armijo * alpha) * merit:
                        break
            alpha *= 0.5
            if alpha < options.min_step:
                raise NoConvergence(f"line search stalled at iteration {it} (weighted residual {wnorm:.3e})")
        z, prof, r = trial, tprof, tr
    raise NoConvergence(f"no convergence in {options.max_iter} iterations (weighted residual {wnorm:.3e})")


def _relaxation(z, prof, r, jac, state, options: SolverOptions):
    """Jacobi-relaxed fixed-point sweeps used when the Newton system is singular."""
    diag = np.diag(jac) if np.isfinite(jac).all() else np.full(len(z), np.nan)
    if not np.all(np.isfinite(diag)) or np.any(diag == 0.0):
        raise SingularJacobian("Jacobian diagonal is singular; relaxation unavailable")
    start = np.linalg.norm(r)
    for _ in range(options.fallback_iter):
        z = z - options.relaxation * r / diag
        prof, r = state(z)
        if not np.all(np.isfinite(r)):
            break
        if np.linalg.norm(r) < 0.5 * start:
            return z, prof, r
    raise SingularJacobian("singular Newton system and relaxation failed to reduce the residual")


def _inertia(prof: Profile, x, y, t, k_spec) -> dict:
    ev = np.linalg.eigvalsh(jacobian(prof, x, y, t, k_spec))
    scale = max(np.abs(ev).max(), 1.0)
    return {"positive": int(np.sum(ev > 1e-12 * scale)), "negative": int(np.sum(ev < -1e-12 * scale))}


def _workers() -> int:
    raw = os.environ.get("DKP_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def solve(problem: HodographProblem, strict: bool = True, report_inertia: bool = False) -> HodographSolution:
    """Solve at every point of the problem.

    With ``warm_start`` each point starts from the previous converged profile
    (points are visited in the given order); otherwise points are independent
    and solved in parallel. With ``strict=False`` failures are flagged instead
    of raised.
    """
    use_log = _use_log(problem)
    opts = problem.options

    def one(point, guess):
        x, y, t = point
        try:
            prof, its, res = solve_point(problem.k_spec, x, y, t, guess, opts, use_log)
            return prof, its, res, True, ""
        except NoConvergence as exc:
            if strict:
                raise
            return None, opts.max_iter, math.inf, False, f"{type(exc).__name__}: {exc}"

    results = []
    if problem.warm_start:
        guess = problem.initial
        for point in problem.points:
            out = one(point, guess)
            if out[3]:
                guess = out[0]
            results.append(out)
    else:
        with ThreadPoolExecutor(max_workers=_workers()) as pool:
            results = list(pool.map(lambda pt: one(pt, problem.initial), problem.points))

    inertia = []
    for point, out in zip(problem.points, results):
        inertia.append(_inertia(out[0], *point, problem.k_spec) if (report_inertia and out[3]) else None)
    return HodographSolution(
        points=problem.points,
        profiles=[r[0] for r in results],
        residuals=np.array([r[2] for r in results]),
        iterations=np.array([r[1] for r in results]),
        converged=np.array([r[3] for r in results]),
        messages=[r[4] for r in results],
        inertia=inertia,
    )


def flow_invariance_residuals(
    k_spec,
    x: float,
    y: float,
    t: float,
    spacing: float,
    initial: Profile,
    options: SolverOptions = SolverOptions(tol=1e-13),
    log_variable: bool | None = None,
) -> tuple[float, float]:
    """Benney and second-flow residual norms of the solution family at ``(x, y, t)``.

    Solutions are computed on the 7-point stencil ``(x, y, t) +- spacing`` along
    each axis; ``x``, ``y`` and ``t`` derivatives are centred differences and
    ``p`` derivatives are spectral. Both residuals should be ``O(spacing^2)``.
    """
    use_log = bool(getattr(k_spec, "has_log", False)) if log_variable is None else log_variable
    centre, _, _ = solve_point(k_spec, x, y, t, initial, options, use_log)
    solved = {}
    for axis in range(3):
        for sgn in (-1, 1):
            pt = [x, y, t]
            pt[axis] += sgn * spacing
            solved[axis, sgn] = solve_point(k_spec, *pt, centre, options, use_log)[0].values

    def d(axis):
        return (solved[axis, 1] - solved[axis, -1]) / (2 * spacing)

    f = centre.values
    dp = centre.dp
    f_x, f_y, f_t = d(0), d(1), d(2)
    f_p = spectral_derivative(f, dp)
    a0_x = integrate(f_x, dp)
    a1_x = integrate(centre.p * f_x, dp)
    a0 = integrate(f, dp)
    p = centre.p
    benney = f_y - (p * f_x - a0_x * f_p)
    second = f_t - ((p**2 + a0) * f_x - (a0_x * p + a1_x) * f_p)
    norm = lambda v: float(np.sqrt(np.sum(v**2) * dp))
    return norm(benney), norm(second)
