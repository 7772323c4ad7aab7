"""Command-line entry point: ``dkp <subcommand> --config <file> --out <dir> [--quiet]``.

Exit status is 0 when every configured check passes, 1 when a check fails and
2 when the run itself fails (bad configuration or a numerical error). Failures
print a JSON report on stderr; ``report.json`` is written whenever ``--out``
is usable.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import json
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, k_density_from_dict, load_config
from .coords import canonical_chart, chebyshev_nodes, envelope_residual, flat_coordinate, plane_curve, slope_function
from .diagnostics import (
    DEFAULT_TOLERANCES,
    central_slice,
    classical_identity_report,
    evaluate_checks,
    frobenius_report,
    recursion_report,
    singular_report,
)
from .errors import BadConfig, DkpError
from .evolve import evolve, relative_drift
from .grid import Profile, p_grid, sample_initial
from .hierarchy import density_per_slice
from .hodograph import HodographProblem, SolverOptions, flow_invariance_residuals, solve
from .io import atomic_write_text, read_snapshot, write_profile, write_snapshot
from .singular import lambda_of

__all__ = ["main", "run", "SUBCOMMANDS"]

DEFAULT_CHECKS = {
    "simulate": ("density_drift", "casimir_drift"),
    "invariants": ("classical_h1", "classical_h2", "recursion", "general_benney"),
    "frobenius-check": (
        "hilbert_involution",
        "tricomi",
        "metric_bridge_eta",
        "metric_bridge_g",
        "unity",
        "commutativity",
        "associativity",
        "invariance",
        "intersection_form",
        "potential_identity",
    ),
    "hodograph": ("hodograph_residual",),
    "coords": ("stationarity", "envelope", "flat_round_trip"),
}
SUBCOMMANDS = tuple(DEFAULT_CHECKS)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, str):
        return value
    return repr(float(value))


def _write_csv(path: Path, header, rows) -> None:
    buffer = _stdio.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    atomic_write_text(path, buffer.getvalue())


def _tolerances(cfg: RunConfig, subcommand: str) -> dict:
    if cfg.checks is not None:
        return dict(cfg.checks)
    return {name: DEFAULT_TOLERANCES[name] for name in DEFAULT_CHECKS[subcommand]}


def _simulate(cfg: RunConfig, out: Path) -> tuple[dict, dict]:
    field = sample_initial(cfg.initial, cfg.grid)
    stride = cfg.output["snapshot_stride"]
    traj = evolve(
        field,
        cfg.flow,
        cfg.time["t_end"],
        cfg.time["dt"],
        monitor_every=cfg.time["monitor_every"],
        densities=cfg.densities,
        snapshot_every=stride,
    )
    probes = [int(np.argmin(np.abs(cfg.grid.x - x))) for x in cfg.output["probes"]]
    header = ["time"]
    for i in probes:
        header += [f"A{k}@x={_fmt(cfg.grid.x[i])}" for k in range(4)]
    header += [s.describe() for s in traj.density_specs] + ["casimir", "decay_x", "decay_p"]
    rows = []
    for j, t in enumerate(traj.times):
        row = [t]
        for i in probes:
            row += [traj.moments[j, k, i] for k in range(4)]
        row += list(traj.densities[j]) + [traj.casimir[j], *traj.decay_ratios[j]]
        rows.append(row)
    _write_csv(out / "monitors.csv", header, rows)
    for j, (snap, t) in enumerate(zip(traj.snapshots, traj.snapshot_times)):
        write_snapshot(snap, out, f"snapshot_{j:04d}", time=t, flow_id=cfg.flow.describe())
    c0 = traj.casimir[0]
    cas = np.abs(traj.casimir - c0)
    residuals = {
        "density_drift": float(np.max(relative_drift(traj))),
        "casimir_drift": float(cas.max() / abs(c0)) if c0 != 0 else float(cas.max()),
    }
    return residuals, {"status": traj.status, "steps_recorded": len(traj.times), "flow": cfg.flow.describe()}


def _invariants(cfg: RunConfig, out: Path) -> tuple[dict, dict]:
    fields = [("initial", 0.0, sample_initial(cfg.initial, cfg.grid))]
    snap_dir = cfg.blocks.get("invariants", {}).get("snapshot_dir")
    if snap_dir:
        for sidecar in sorted(Path(snap_dir).glob("*.json")):
            if not sidecar.with_suffix(".f64").exists():
                continue
            snap, meta = read_snapshot(sidecar.parent, sidecar.stem)
            fields.append((sidecar.stem, meta["time"], snap))
    specs = cfg.densities or ()
    header = ["snapshot", "time", "classical_h1", "classical_h2"] + [s.describe() for s in specs]
    rows, worst = [], {"classical_h1": 0.0, "classical_h2": 0.0}
    for name, t, fld in fields:
        ident = classical_identity_report(central_slice(fld))
        worst = {k: max(worst[k], float(ident[k])) for k in worst}
        totals = [float(np.sum(density_per_slice(fld, s)) * fld.grid.dx) for s in specs]
        rows.append([name, t, ident["classical_h1"], ident["classical_h2"], *totals])
    _write_csv(out / "invariants.csv", header, rows)
    residuals = {**worst, **recursion_report(fields[0][2])}
    return residuals, {"snapshots": len(fields)}


def _frobenius(cfg: RunConfig, out: Path) -> tuple[dict, dict]:
    block = cfg.blocks.get("frobenius", {})
    f = central_slice(sample_initial(cfg.initial, cfg.grid), block.get("x", 0.0))
    residuals = {**singular_report(f), **frobenius_report(f, block.get("samples", 3), block.get("seed", 0))}
    return residuals, {}


def _hodograph(cfg: RunConfig, out: Path) -> tuple[dict, dict]:
    block = cfg.blocks.get("hodograph")
    if block is None:
        raise BadConfig("hodograph: required")
    grid = p_grid(cfg.grid.p_min, cfg.grid.p_max, cfg.grid.n_p)
    guess = block.get("initial", {})
    amplitude, width = guess.get("amplitude", -0.1), guess.get("width", 1.0)
    initial = Profile(grid, amplitude * np.exp(-((grid.p / width) ** 2)))
    k_spec = k_density_from_dict(block["k"])
    options = SolverOptions(**block.get("solver", {}))
    problem = HodographProblem(
        k_spec, block["points"], initial, options, block.get("warm_start", True), block.get("log_variable")
    )
    sol = solve(problem, strict=False)
    rows = []
    for j, point in enumerate(sol.points):
        rows.append([j, *point, int(sol.converged[j]), int(sol.iterations[j]), float(sol.residuals[j])])
        if sol.converged[j]:
            meta = {"x": point[0], "y": point[1], "t": point[2], "residual": float(sol.residuals[j])}
            write_profile(sol.profiles[j].values, grid.p_min, grid.p_max, out, f"solution_{j:04d}", meta)
    _write_csv(out / "hodograph.csv", ["index", "x", "y", "t", "converged", "iterations", "residual"], rows)
    extra = {"converged": int(np.sum(sol.converged)), "points": len(sol.points), "messages": sol.messages}
    if "stencil" in block:
        st = block["stencil"]
        start = next((p for p, ok in zip(sol.profiles, sol.converged) if ok), initial)
        benney, second = flow_invariance_residuals(
            k_spec, *st["point"], st["spacing"], start, log_variable=block.get("log_variable")
        )
        extra["stencil"] = {"spacing": st["spacing"], "benney": benney, "second": second}
    return {"hodograph_residual": float(np.max(sol.residuals))}, extra


def _coords(cfg: RunConfig, out: Path) -> tuple[dict, dict]:
    block = cfg.blocks.get("coords", {})
    f = central_slice(sample_initial(cfg.initial, cfg.grid), block.get("x", 0.0))
    lam = lambda_of(f)
    curve = plane_curve(f, lam)
    _write_csv(
        out / "curve.csv",
        ["p", "curve_x", "curve_y", "tangent_x", "tangent_y"],
        [[p, *pt, *tg] for p, pt, tg in zip(curve.p, curve.points, curve.tangents)],
    )
    window = tuple(block.get("window", (0.2, 1.5)))
    alpha_block = block.get("alpha", {})
    nodes = alpha_block.get("nodes", 48)
    if "range" in alpha_block:
        lo, hi = alpha_block["range"]
    else:
        slope = slope_function(f, lam)
        inside = (f.p >= window[0]) & (f.p <= window[1])
        lo, hi = np.percentile(slope.m.values[inside], [10, 90])
    chart = canonical_chart(f, lam, chebyshev_nodes(lo, hi, nodes), window, alpha0=block.get("alpha0", 0.0))
    _write_csv(
        out / "chart.csv",
        ["alpha", "kappa", "r", "stationarity"],
        zip(chart.alpha, chart.kappa, chart.r, chart.stationarity),
    )
    _write_csv(
        out / "stationary.csv",
        ["p", "r", "alpha0"],
        [[s["p"], s["r"], chart.alpha0] for s in chart.stationary_points],
    )
    residuals = {"stationarity": float(chart.stationarity.max()), "envelope": envelope_residual(chart, f)}
    if "flat" in block:
        flat = flat_coordinate(f, block["flat"]["mu"], tuple(block["flat"]["branch"]))
        _write_csv(out / "flat.csv", ["mu", "w", "round_trip"], zip(flat.mu, flat.w, flat.round_trip))
        residuals["flat_round_trip"] = float(flat.round_trip.max())
    return residuals, {"window": list(window), "alpha_range": [float(lo), float(hi)], "alpha0": chart.alpha0}


_RUNNERS = {
    "simulate": _simulate,
    "invariants": _invariants,
    "frobenius-check": _frobenius,
    "hodograph": _hodograph,
    "coords": _coords,
}


def run(subcommand: str, cfg: RunConfig, out) -> tuple[int, dict]:
    """Execute a subcommand; returns the exit status and the report."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        residuals, extra = _RUNNERS[subcommand](cfg, out)
    except DkpError as exc:
        report = {"status": "error", "subcommand": subcommand, **exc.to_report()}
        atomic_write_text(out / "report.json", json.dumps(report, sort_keys=True, indent=2) + "\n")
        return 2, report
    verdicts = evaluate_checks(residuals, _tolerances(cfg, subcommand))
    failed = sorted(name for name, v in verdicts.items() if not v["passed"])
    # defaults that do not apply (e.g. no flat-coordinate block) are skipped; explicit ones must run
    missing = sorted(set(cfg.checks or ()) - set(verdicts))
    report = {
        "status": "passed" if not failed and not missing else "failed",
        "subcommand": subcommand,
        "checks": verdicts,
        "failed_checks": failed,
        "unavailable_checks": missing,
        "residuals": {k: float(v) for k, v in residuals.items()},
        "details": extra,
    }
    atomic_write_text(out / "report.json", json.dumps(report, sort_keys=True, indent=2) + "\n")
    return (0 if report["status"] == "passed" else 1), report


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dkp", description="Kinetic dispersionless KP toolkit")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--quiet", action="store_true", help="suppress the summary on success")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (DkpError, OSError) as exc:
        report = {"status": "error", "subcommand": args.subcommand}
        if isinstance(exc, DkpError):
            report.update(exc.to_report())
        else:
            report.update(error=type(exc).__name__, message=str(exc))
        print(json.dumps(report, sort_keys=True), file=sys.stderr)
        return 2
    status, report = run(args.subcommand, cfg, args.out)
    if status != 0:
        print(json.dumps(report, sort_keys=True), file=sys.stderr)
    elif not args.quiet:
        print(json.dumps({"status": report["status"], "residuals": report["residuals"]}, sort_keys=True))
    return status


if __name__ == "__main__":
    sys.exit(main())
