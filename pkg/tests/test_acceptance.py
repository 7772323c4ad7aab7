"""Acceptance criteria on the reference setup.

Each test collects its sub-checks, prints one PASS/FAIL line (also repeated in
the terminal summary) and then asserts. Run with ``pytest tests/test_acceptance.py -s``.
"""

import json
from pathlib import Path

import numpy as np
import pytest

import oracles
from dkp.cli import main, run
from dkp.config import load_config, parse_config
from dkp.coords import canonical_chart, chebyshev_nodes, envelope_residual, flat_coordinate
from dkp.diagnostics import classical_identity_report, frobenius_report, recursion_report, singular_report
from dkp.evolve import (
    benney_moment_residual,
    commutativity_defect,
    dkp_residual,
    relative_drift,
)
from dkp.frobenius import potential, potential_identity_residual
from dkp.grid import Profile, p_grid
from dkp.hodograph import (
    KDensity,
    MuFactor,
    NuFactor,
    SeparableTerm,
    SolverOptions,
    flow_invariance_residuals,
    hodograph_residual,
    jacobian,
    solve_point,
    weighted_norm,
)
from dkp.io import read_snapshot, write_snapshot
from dkp.singular import lambda_of
from helpers import ACCEPTANCE_LINES, order_or_floor, subsample

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
GRID_BLOCK = {"x_min": -12, "x_max": 12, "n_x": 256, "p_min": -12, "p_max": 12, "n_p": 256}

# fixed members of the Gaussian test family poly(p) exp(-((p - c)/w)^2)
FAMILY = [
    ((1.0,), 1.0, 0.0),
    ((-0.5,), 1.0, 0.0),
    ((1.0, 0.0), 1.0, 0.0),
    ((0.3, -1.0, 0.5), 0.8, 0.4),
    ((1.0, 0.2, -0.7, 1.0), 1.3, -0.6),
]


def _family(grid, coeffs, width, centre):
    p = grid.p
    return Profile(grid, np.polyval(coeffs, p) * np.exp(-(((p - centre) / width) ** 2)))


def _report(number, title, checks, capsys):
    """Record one line for a criterion; ``checks`` holds ``(name, value, bound, ok)``."""
    ok = all(c[3] for c in checks)
    parts = "; ".join(f"{name} {value:.3g} vs {bound}" for name, value, bound, _ in checks)
    line = f"{'PASS' if ok else 'FAIL'} [{number}] {title}: {parts}"
    ACCEPTANCE_LINES.append(line)
    with capsys.disabled():
        print("\n" + line)
    failed = [c[0] for c in checks if not c[3]]
    assert ok, f"criterion {number} failed: {failed}"


def _le(name, value, tol):
    return (name, float(value), f"<= {tol:g}", bool(np.isfinite(value) and value <= tol))


def _ratio(name, coarse, fine, target, spread):
    r = coarse / fine if fine > 0 else np.inf
    lo, hi = target * (1 - spread), target * (1 + spread)
    return (name, float(r), f"in [{lo:g}, {hi:g}]", bool(lo <= r <= hi))


def test_criterion_01_hilbert_involution(slice_grid, capsys):
    worst = max(singular_report(_family(slice_grid, *m))["hilbert_involution"] for m in FAMILY)
    _report(1, "Hilbert involution on the Gaussian family", [_le("max rel", worst, 1e-8)], capsys)


def test_criterion_02_product_identity(slice_grid, capsys):
    profs = [_family(slice_grid, *m) for m in FAMILY]
    worst = 0.0
    for a in profs:
        for b in profs:
            worst = max(worst, singular_report(a, b)["tricomi"])
    _report(2, "Hilbert product identity on the family", [_le("max rel", worst, 1e-6)], capsys)


def test_criterion_03_lambda_oracles(gaussian, capsys):
    lam = lambda_of(gaussian).values
    p = gaussian.p
    dawson = np.abs(lam - oracles.lambda_gaussian(p)).max()
    gauss = lambda q: np.exp(-(q**2))
    idx = np.arange(8, 256, 16)
    # the symmetric pairs must reach past the Gaussian on both sides of p
    midpoint = max(abs(lam[i] - (p[i] + oracles.pv_offset_midpoint(gauss, p[i], reach=abs(p[i]) + 10))) for i in idx)
    checks = [_le("Dawson max", dawson, 1e-7), _le("midpoint p.v. max", midpoint, 1e-7)]
    _report(3, "lambda vs Dawson and midpoint p.v. oracles", checks, capsys)


@pytest.fixture(scope="module")
def asymmetric(slice_grid):
    p = slice_grid.p
    return Profile(slice_grid, -0.5 * (1 + 0.4 * p) * np.exp(-((p - 0.3) ** 2)))


@pytest.fixture(scope="module")
def frobenius_reports(ref_slice, asymmetric):
    return [frobenius_report(ref_slice), frobenius_report(asymmetric)]


def test_criterion_04_metric_bridges(frobenius_reports, capsys):
    eta = max(r["metric_bridge_eta"] for r in frobenius_reports)
    g = max(r["metric_bridge_g"] for r in frobenius_reports)
    _report(4, "kernel metrics vs moment formulas, k,n <= 3", [_le("eta rel", eta, 1e-6), _le("g rel", g, 1e-6)], capsys)


def test_criterion_05_frobenius_algebra(frobenius_reports, capsys):
    checks = [
        _le(name, max(r[name] for r in frobenius_reports), 1e-5)
        for name in ("unity", "commutativity", "associativity", "invariance")
    ]
    _report(5, "Frobenius algebra on cubic tangent vectors", checks, capsys)


def test_criterion_06_intersection_form(frobenius_reports, capsys):
    worst = max(r["intersection_form"] for r in frobenius_reports)
    _report(6, "intersection form direct vs Euler construction", [_le("monomials rel", worst, 1e-6)], capsys)


def test_criterion_07_potential(gaussian, capsys):
    res = {}
    for n in (64, 128, 256):
        grid = p_grid(-12, 12, n)
        res[n] = potential_identity_residual(Profile(grid, np.exp(-(grid.p**2))))
    floor = 1e-14
    refine = res[128] / res[256] if res[256] > 0 else np.inf
    quad_gauss = oracles.log_potential_quad(lambda q: np.exp(-(q**2)))
    shifted = lambda q: (1 + q) * np.exp(-((q - 0.3) ** 2))
    quad_shifted = oracles.log_potential_quad(shifted)
    f_shifted = potential(Profile(gaussian.grid, shifted(gaussian.p)))
    checks = [
        _le("identity n=256", res[256], 1e-5),
        (
            "128->256 ratio",
            float(refine),
            f">= 16 or both <= {floor:g} (res {res[128]:.2g}, {res[256]:.2g})",
            order_or_floor(res[128], res[256], 16, floor),
        ),
        (
            "64->128 ratio",
            float(res[64] / res[128]) if res[128] > 0 else np.inf,
            ">= 16",
            order_or_floor(res[64], res[128], 16, floor),
        ),
        _le("F gaussian vs quad rel", abs(potential(gaussian) / quad_gauss - 1), 1e-6),
        _le("F shifted vs quad rel", abs(f_shifted / quad_shifted - 1), 1e-6),
    ]
    _report(7, "potential identity and log-quadrature oracle", checks, capsys)


def test_criterion_08_classical_densities(ref_slice, asymmetric, capsys):
    reps = [classical_identity_report(ref_slice), classical_identity_report(asymmetric)]
    checks = [
        _le("H1 - A1 abs", max(r["classical_h1"] for r in reps), 1e-8),
        _le("H2 closed form rel", max(r["classical_h2"] for r in reps), 1e-6),
    ]
    _report(8, "classical density identities", checks, capsys)


def test_criterion_09_recursion(ref_field, capsys):
    rep = recursion_report(ref_field)
    checks = [
        _le("kernel vs Hamiltonian rel", rep["recursion"], 1e-6),
        _le("General(f,1) vs Benney rel", rep["general_benney"], 1e-6),
        _le("General(f,2) vs Second rel", rep["general_second"], 1e-6),
    ]
    _report(9, "recursion certificate", checks, capsys)


def test_criterion_10_dynamics(ref_field, reference_run, richardson_finals, capsys):
    drift = relative_drift(reference_run).max()
    dx = ref_field.grid.dx
    checks = [("status", 0.0, reference_run.status, reference_run.status == "completed"), _le("H0..H3 drift", drift, 1e-5)]
    for k in range(4):
        coarse = benney_moment_residual(subsample(reference_run, 4), k, dx).max()
        fine = benney_moment_residual(subsample(reference_run, 2), k, dx).max()
        checks.append(_ratio(f"moment A{k} ratio", coarse, fine, 4, 0.25))
    checks.append(_ratio("dKP ratio", dkp_residual(ref_field, 1e-2, 1e-2), dkp_residual(ref_field, 5e-3, 5e-3), 4, 0.25))
    c_coarse = commutativity_defect(ref_field, 1e-2, 1e-2)
    c_fine = commutativity_defect(ref_field, 5e-3, 5e-3)
    checks.append(
        (
            "commutativity ratio",
            float(c_coarse / c_fine),
            f">= 3 or both <= 1e-13 (defects {c_coarse:.2g}, {c_fine:.2g})",
            order_or_floor(c_coarse, c_fine, 3, 1e-13),
        )
    )
    e_coarse = np.linalg.norm(richardson_finals[64] - richardson_finals[128])
    e_fine = np.linalg.norm(richardson_finals[128] - richardson_finals[256])
    checks.append(_ratio("RK4 self-convergence", e_coarse, e_fine, 16, 0.2))
    _report(10, "Benney dynamics", checks, capsys)


LOG_POINT = (-3.0, 0.2, -0.5)
MIXED_K = KDensity(
    (
        SeparableTerm(1.0, MuFactor("xlogx"), NuFactor("power", 0)),
        SeparableTerm(0.3, MuFactor("power", 2), NuFactor("power", 1)),
    )
)


def test_criterion_11_hodograph(slice_grid, capsys):
    p = slice_grid.p
    x, y, t = LOG_POINT
    guess = Profile(slice_grid, -np.exp(x + y * p + t * p**2))
    f, _, _ = solve_point(MIXED_K, x, y, t, guess, SolverOptions(tol=1e-13), True)
    weighted = weighted_norm(f, hodograph_residual(f, x, y, t, MIXED_K))
    jac = jacobian(f, x, y, t, MIXED_K)
    rng = np.random.default_rng(3)
    eps, worst = 1e-6, 0.0
    for _ in range(5):
        v = f.values * rng.normal(size=p.size)
        plus = hodograph_residual(f.with_values(f.values + eps * v), x, y, t, MIXED_K).values
        minus = hodograph_residual(f.with_values(f.values - eps * v), x, y, t, MIXED_K).values
        exact = jac @ v
        worst = max(worst, np.linalg.norm((plus - minus) / (2 * eps) - exact) / np.linalg.norm(exact))
    coarse = flow_invariance_residuals(MIXED_K, x, y, t, 0.04, f, log_variable=True)
    fine = flow_invariance_residuals(MIXED_K, x, y, t, 0.02, f, log_variable=True)
    checks = [_le("weighted residual", weighted, 1e-8), _le("Jacobian vs FD rel", worst, 1e-6)]
    checks += [_ratio(f"{name} flow ratio", c, d, 4, 0.25) for name, c, d in zip(("Benney", "second"), coarse, fine)]
    _report(11, "hodograph solutions", checks, capsys)


def test_criterion_12_coordinates(gaussian, capsys):
    chart = canonical_chart(gaussian, None, chebyshev_nodes(-2.0, -0.06, 48), (0.2, 1.5))
    flat = flat_coordinate(gaussian, np.linspace(0.01, 0.95, 25), (0.1, 3.0))
    at_e = flat_coordinate(gaussian, np.exp(-1.0), (0.1, 3.0))
    checks = [
        _le("stationarity", chart.stationarity.max(), 1e-8),
        _le("envelope", envelope_residual(chart, gaussian), 1e-6),
        _le("flat round trip", flat.round_trip.max(), 1e-10),
        _le("|w(1/e) - 1|", abs(at_e.w[0] - 1.0), 1e-10),
    ]
    _report(12, "canonical and flat coordinates", checks, capsys)


def test_criterion_13_plumbing(ref_field, tmp_path, capsys):
    write_snapshot(ref_field, tmp_path / "snap", "s", time=0.5, flow_id="benney")
    back, _ = read_snapshot(tmp_path / "snap", "s")
    round_trip = back.values.tobytes() == ref_field.values.tobytes()

    small = {"x_min": -12, "x_max": 12, "n_x": 128, "p_min": -12, "p_max": 12, "n_p": 128}
    cfg_path = tmp_path / "sim.json"
    cfg_path.write_text(
        json.dumps({"grid": small, "time": {"t_end": 0.0625, "dt": 0.0078125}, "output": {"snapshot_stride": 4}})
    )
    for name in ("a", "b"):
        main(["simulate", "--config", str(cfg_path), "--out", str(tmp_path / name), "--quiet"])
    names = sorted(q.name for q in (tmp_path / "a").iterdir())
    identical = names == sorted(q.name for q in (tmp_path / "b").iterdir()) and all(
        (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names
    )

    def cfg(**blocks):
        return parse_config(json.dumps({"grid": GRID_BLOCK, **blocks}))

    cases = [
        ("pass", "frobenius-check", load_config(CONFIGS / "frobenius.json"), 0),
        ("CFL", "simulate", cfg(time={"t_end": 0.5, "dt": 0.25}), 2),
        ("degenerate", "coords", cfg(initial={"kind": "zero"}), 2),
        ("tolerance", "frobenius-check", cfg(checks={"unity": 1e-30}), 1),
    ]
    statuses = {label: run(sub, c, tmp_path / label)[0] for label, sub, c, _ in cases}
    contract = all(statuses[label] == want for label, _, _, want in cases)
    checks = [
        ("snapshot bit-exact", float(round_trip), "== 1", round_trip),
        ("rerun byte-identical", float(identical), "== 1", identical),
        ("exit statuses", float(contract), f"{statuses}", contract),
    ]
    _report(13, "plumbing", checks, capsys)
