"""Named residual reports shared by the command-line tool and the test-suite.

Each report maps a check name to a non-negative residual; a check passes when
its residual is at most the configured tolerance.
"""

from __future__ import annotations

import numpy as np

from .evolve import benney_rhs, second_rhs
from .frobenius import (
    TangentCoefficient,
    eta_pair,
    intersection_form,
    intersection_via_euler,
    potential_identity_residual,
    product,
    unity,
)
from .grid import Field, Profile, integrate, spectral_derivative
from .hierarchy import DensitySpec, PowerLaw, density, hamiltonian_rhs, kernel_rhs
from .moments import g_metric_moments, km_metric, metric_bridge, moments
from .singular import hilbert, lambda_of, tricomi_residual

__all__ = [
    "DEFAULT_TOLERANCES",
    "RECURSION_SPECS",
    "central_slice",
    "singular_report",
    "frobenius_report",
    "classical_identity_report",
    "recursion_report",
    "evaluate_checks",
]

DEFAULT_TOLERANCES = {
    "hilbert_involution": 1e-8,
    "tricomi": 1e-6,
    "metric_bridge_eta": 1e-6,
    "metric_bridge_g": 1e-6,
    "unity": 1e-5,
    "commutativity": 1e-5,
    "associativity": 1e-5,
    "invariance": 1e-5,
    "intersection_form": 1e-6,
    "potential_identity": 1e-5,
    "classical_h1": 1e-8,
    "classical_h2": 1e-6,
    "recursion": 1e-6,
    "general_benney": 1e-6,
    "general_second": 1e-6,
    "density_drift": 1e-5,
    "casimir_drift": 1e-10,
    "hodograph_residual": 1e-8,
    "stationarity": 1e-8,
    "envelope": 1e-6,
    "flat_round_trip": 1e-10,
}

RECURSION_SPECS = (
    DensitySpec(PowerLaw(1), 0),
    DensitySpec(PowerLaw(1), 1),
    DensitySpec(PowerLaw(1), 2),
    DensitySpec(PowerLaw(2), 0),
    DensitySpec(PowerLaw(2), 1),
)


def central_slice(field: Field, x: float = 0.0) -> Profile:
    """The x-slice nearest to ``x``."""
    return field.row(int(np.argmin(np.abs(field.grid.x - x))))


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    return float(np.linalg.norm(a - b) / scale) if scale > 0 else float(np.linalg.norm(a - b))


def singular_report(f: Profile, partner: Profile | None = None) -> dict:
    """Hilbert involution and product-identity residuals, both relative."""
    twice = hilbert(hilbert(f))
    norm = np.linalg.norm(f.values)
    inv = float(np.linalg.norm(twice.values + f.values) / norm) if norm > 0 else 0.0
    partner = f.with_values(f.p * f.values) if partner is None else partner
    return {"hilbert_involution": inv, "tricomi": tricomi_residual(f, partner, relative=True)}


def _table_relative(rows, zero_fraction: float = 1e-8) -> float:
    """Worst ``|difference| / |reference|`` over a table of ``(difference, reference)``.

    Entries whose reference is below ``zero_fraction`` of the table maximum are
    structurally zero; they are measured against the table maximum instead.
    """
    top = max(abs(ref) for _, ref in rows)
    if top == 0:
        return max(abs(d) for d, _ in rows)
    worst = 0.0
    for diff, ref in rows:
        scale = abs(ref) if abs(ref) >= zero_fraction * top else top
        worst = max(worst, abs(diff) / scale)
    return float(worst)


def _random_cubic(grid, rng) -> TangentCoefficient:
    return TangentCoefficient.from_polynomial(grid, rng.normal(size=4))


def frobenius_report(f: Profile, samples: int = 3, seed: int = 0, max_index: int = 3) -> dict:
    """Worst-case algebra, metric-bridge, intersection-form and potential residuals.

    Vector residuals are measured on raw vectors ``h f'`` relative to the
    larger operand; scalar residuals are relative to the larger side.
    """
    lam = lambda_of(f)
    fp = spectral_derivative(f.values, f.dp)
    raw = lambda X: X.values * fp
    rng = np.random.default_rng(seed)
    out = dict.fromkeys(("unity", "commutativity", "associativity", "invariance"), 0.0)
    one = unity(f)
    for _ in range(samples):
        X, Y, Z = (_random_cubic(f.grid, rng) for _ in range(3))
        xy = product(X, Y, f, lam)
        out["unity"] = max(out["unity"], _rel(raw(product(one, Y, f, lam)), raw(Y)))
        out["commutativity"] = max(out["commutativity"], _rel(raw(xy), raw(product(Y, X, f, lam))))
        left = product(xy, Z, f, lam)
        right = product(X, product(Y, Z, f, lam), f, lam)
        out["associativity"] = max(out["associativity"], _rel(raw(left), raw(right)))
        e1, e2 = eta_pair(xy, Z, f), eta_pair(X, product(Y, Z, f, lam), f)
        out["invariance"] = max(out["invariance"], abs(e1 - e2) / max(abs(e1), abs(e2), 1e-300))

    A = moments(f, 2 * max_index)
    eta_rows, g_rows, form_rows = [], [], []
    for k in range(max_index + 1):
        for n in range(max_index + 1):
            eta_res, g_res = metric_bridge(f, k, n, lam)
            eta_rows.append((eta_res, km_metric(A, k, n)))
            g_rows.append((g_res, g_metric_moments(A, k, n)))
            a, b = f.p**k, f.p**n
            direct, via = intersection_form(a, b, f, lam), intersection_via_euler(a, b, f, lam)
            form_rows.append((abs(direct - via), max(abs(direct), abs(via))))
    out.update(
        metric_bridge_eta=_table_relative(eta_rows),
        metric_bridge_g=_table_relative(g_rows),
        intersection_form=_table_relative(form_rows),
        potential_identity=potential_identity_residual(f, lam),
    )
    return out


def classical_identity_report(f: Profile) -> dict:
    """``H1 = A^1`` (absolute) and ``H2 = A^2/2 + (A^0)^2/2 + (pi^2/6) int f^3`` (relative)."""
    lam = lambda_of(f)
    A = moments(f, 2)
    h1 = density(f, lam, DensitySpec(PowerLaw(1), 1))
    h2 = density(f, lam, DensitySpec(PowerLaw(1), 2))
    closed = 0.5 * A[2] + 0.5 * A[0] ** 2 + np.pi**2 / 6 * integrate(f.values**3, f.dp)
    return {
        "classical_h1": abs(h1 - A[1]),
        "classical_h2": abs(h2 - closed) / max(abs(closed), abs(h2), 1e-300),
    }


def recursion_report(field: Field, specs=RECURSION_SPECS) -> dict:
    """Kernel route versus Hamiltonian route, and the two classical flows."""
    worst = 0.0
    for spec in specs:
        worst = max(worst, _rel(kernel_rhs(field, spec).values, hamiltonian_rhs(field, spec).values))
    general1 = hamiltonian_rhs(field, DensitySpec(PowerLaw(1), 1)).values
    general2 = hamiltonian_rhs(field, DensitySpec(PowerLaw(1), 2)).values
    return {
        "recursion": worst,
        "general_benney": _rel(general1, benney_rhs(field).values),
        "general_second": _rel(general2, second_rhs(field).values),
    }


def evaluate_checks(residuals: dict, tolerances: dict) -> dict:
    """Per-check verdicts for every check that has a tolerance."""
    verdicts = {}
    for name, tol in tolerances.items():
        if name not in residuals:
            continue
        value = float(residuals[name])
        verdicts[name] = {"residual": value, "tolerance": float(tol), "passed": bool(np.isfinite(value) and value <= tol)}
    return verdicts
