import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from dkp.cli import main, run
from dkp.config import load_config, parse_config
from dkp.errors import BadConfig, FormatError
from dkp.grid import Field, GaussianProduct, make_grid, sample_initial
from dkp.io import read_profile, read_snapshot, write_profile, write_snapshot

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
GRID = {"x_min": -12, "x_max": 12, "n_x": 256, "p_min": -12, "p_max": 12, "n_p": 256}
SMALL_GRID = {"x_min": -12, "x_max": 12, "n_x": 128, "p_min": -12, "p_max": 12, "n_p": 128}


def _cfg(**blocks):
    return parse_config(json.dumps({"grid": GRID, **blocks}))


def test_minimal_config():
    cfg = _cfg()
    assert cfg.flow.kind == "benney"
    assert cfg.time == {"t_end": 0.5, "dt": 1 / 512, "monitor_every": 1}


@pytest.mark.parametrize(
    "text, message",
    [
        ("{}", "grid: required"),
        (json.dumps({"grid": GRID, "time": {"dt": -1}}), "time.dt"),
        (json.dumps({"grid": GRID, "time": {"t_end": 0.1, "dt": 0.03}}), "time.dt"),
        (json.dumps({"grid": GRID, "flow": {"kind": "general", "general": {"h": {"power": 1}, "n": -1}}}), "flow.general.n: must be ≥ 0"),
        (json.dumps({"grid": {**GRID, "n_p": 4}}), "grid.n_p"),
        (json.dumps({"grid": GRID, "checks": {"unity": 0}}), "checks.unity"),
        ("[1, 2]", "must be a JSON object"),
        ("{", "invalid JSON"),
    ],
)
def test_config_errors(text, message):
    with pytest.raises(BadConfig, match=message):
        parse_config(text)


def test_example_configs_parse():
    for path in sorted(CONFIGS.glob("*.json")):
        load_config(path)


def test_snapshot_round_trip_bit_exact(ref_field, tmp_path):
    write_snapshot(ref_field, tmp_path, "snap", time=0.25, flow_id="benney")
    back, meta = read_snapshot(tmp_path, "snap")
    assert back.values.tobytes() == ref_field.values.tobytes()
    assert back.grid == ref_field.grid
    assert meta["time"] == 0.25 and meta["flow_id"] == "benney"
    raw = (tmp_path / "snap.f64").read_bytes()
    assert raw == ref_field.values.astype("<f8").tobytes(order="C")


def test_snapshot_truncated_payload(ref_field, tmp_path):
    write_snapshot(ref_field, tmp_path, "snap")
    path = tmp_path / "snap.f64"
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(FormatError):
        read_snapshot(tmp_path, "snap")


def test_snapshot_mismatched_sidecar(ref_field, tmp_path):
    write_snapshot(ref_field, tmp_path, "snap")
    side = tmp_path / "snap.json"
    meta = json.loads(side.read_text())
    meta["n_p"] = 128
    side.write_text(json.dumps(meta))
    with pytest.raises(FormatError):
        read_snapshot(tmp_path, "snap")


def test_snapshot_missing_key(ref_field, tmp_path):
    write_snapshot(ref_field, tmp_path, "snap")
    side = tmp_path / "snap.json"
    meta = json.loads(side.read_text())
    del meta["flow_id"]
    side.write_text(json.dumps(meta))
    with pytest.raises(FormatError, match="flow_id"):
        read_snapshot(tmp_path, "snap")


def test_profile_round_trip(tmp_path):
    values = np.random.default_rng(0).normal(size=32)
    write_profile(values, -1.0, 1.0, tmp_path, "prof", {"note": "x"})
    back, meta = read_profile(tmp_path, "prof")
    assert back.tobytes() == values.tobytes() and meta["note"] == "x"


def test_no_temporary_files_left(ref_field, tmp_path):
    write_snapshot(ref_field, tmp_path, "snap")
    assert sorted(p.name for p in tmp_path.iterdir()) == ["snap.f64", "snap.json"]


def _small_simulate(tmp_path):
    cfg = {
        "grid": SMALL_GRID,
        "initial": {"kind": "gaussian", "gaussian": {"amplitude": -0.5}},
        "time": {"t_end": 0.0625, "dt": 0.0078125},
        "output": {"snapshot_stride": 4},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_rerun_byte_identical(tmp_path):
    cfg = _small_simulate(tmp_path)
    for name in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / name), "--quiet"]) == 0
    files_a = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files_a == sorted(p.name for p in (tmp_path / "b").iterdir())
    assert "monitors.csv" in files_a and "snapshot_0001.f64" in files_a
    for name in files_a:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_snapshot_readable(tmp_path):
    cfg = _small_simulate(tmp_path)
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o"), "--quiet"])
    fld, meta = read_snapshot(tmp_path / "o", "snapshot_0000")
    expected = sample_initial(GaussianProduct(-0.5), make_grid(**SMALL_GRID))
    assert fld.values.tobytes() == expected.values.tobytes()
    assert meta["flow_id"] == "benney"


def test_exit_pass_case(tmp_path):
    status, report = run("frobenius-check", load_config(CONFIGS / "frobenius.json"), tmp_path)
    assert status == 0 and report["status"] == "passed"
    assert json.loads((tmp_path / "report.json").read_text()) == report


def test_exit_cfl_violation(tmp_path):
    status, report = run("simulate", _cfg(time={"t_end": 0.5, "dt": 0.25}), tmp_path)
    assert status == 2 and report["error"] == "CFLViolation"


def test_exit_degenerate_coords(tmp_path):
    status, report = run("coords", _cfg(initial={"kind": "zero"}), tmp_path)
    assert status == 2 and report["error"] == "DegenerateDerivative"


def test_exit_failed_tolerance(tmp_path):
    status, report = run("frobenius-check", _cfg(checks={"unity": 1e-30}), tmp_path)
    assert status == 1 and report["failed_checks"] == ["unity"]


def test_exit_missing_block_for_explicit_check(tmp_path):
    status, report = run("coords", _cfg(checks={"flat_round_trip": 1e-10}), tmp_path)
    assert status == 1 and report["unavailable_checks"] == ["flat_round_trip"]


def test_main_reports_config_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{}")
    assert main(["invariants", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "BadConfig" and "grid: required" in err["message"]


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "dkp.cli", "frobenius-check", "--config", str(CONFIGS / "frobenius.json"), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["status"] == "passed"
