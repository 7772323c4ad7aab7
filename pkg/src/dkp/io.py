"""Field snapshots (JSON sidecar plus raw little-endian float64 payload) and atomic writes."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import FormatError
from .grid import Field, make_grid

__all__ = [
    "atomic_write_bytes",
    "atomic_write_text",
    "write_snapshot",
    "read_snapshot",
    "write_profile",
    "read_profile",
]

SIDECAR_KEYS = ("n_x", "n_p", "x_min", "x_max", "p_min", "p_max", "time", "flow_id")


def atomic_write_bytes(path, data: bytes) -> None:
    """Write ``data`` to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_snapshot(field: Field, directory, name: str, time: float = 0.0, flow_id: str = "") -> tuple[Path, Path]:
    """Write ``<name>.json`` and ``<name>.f64``; returns both paths."""
    directory = Path(directory)
    sidecar = dict(field.grid.as_dict())
    sidecar.update(time=float(time), flow_id=str(flow_id))
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes(order="C")
    json_path = directory / f"{name}.json"
    raw_path = directory / f"{name}.f64"
    atomic_write_bytes(raw_path, payload)
    atomic_write_text(json_path, json.dumps(sidecar, sort_keys=True, indent=2) + "\n")
    return json_path, raw_path


def read_snapshot(directory, name: str) -> tuple[Field, dict]:
    """Read a snapshot written by :func:`write_snapshot`.

    Raises
    ------
    FormatError
        On a malformed sidecar or a payload whose size disagrees with it.
    """
    directory = Path(directory)
    try:
        sidecar = json.loads((directory / f"{name}.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"sidecar {name}.json unreadable: {exc}") from exc
    missing = [k for k in SIDECAR_KEYS if k not in sidecar]
    if missing:
        raise FormatError(f"sidecar missing keys: {missing}")
    try:
        grid = make_grid(
            sidecar["x_min"], sidecar["x_max"], sidecar["n_x"], sidecar["p_min"], sidecar["p_max"], sidecar["n_p"]
        )
    except ValueError as exc:
        raise FormatError(f"sidecar grid invalid: {exc}") from exc
    try:
        data = (directory / f"{name}.f64").read_bytes()
    except OSError as exc:
        raise FormatError(f"payload {name}.f64 unreadable: {exc}") from exc
    expected = grid.n_x * grid.n_p * 8
    if len(data) != expected:
        raise FormatError(f"payload has {len(data)} bytes, sidecar implies {expected}")
    values = np.frombuffer(data, dtype="<f8").reshape(grid.n_x, grid.n_p).astype(np.float64)
    return Field(grid, values), sidecar


def write_profile(values, p_min: float, p_max: float, directory, name: str, meta: dict | None = None) -> tuple[Path, Path]:
    """Single-slice snapshot: sidecar ``{n_p, p_min, p_max, ...meta}`` plus raw payload."""
    directory = Path(directory)
    values = np.ascontiguousarray(values, dtype="<f8")
    sidecar = {"n_p": int(values.size), "p_min": float(p_min), "p_max": float(p_max), **(meta or {})}
    json_path = directory / f"{name}.json"
    raw_path = directory / f"{name}.f64"
    atomic_write_bytes(raw_path, values.tobytes())
    atomic_write_text(json_path, json.dumps(sidecar, sort_keys=True, indent=2) + "\n")
    return json_path, raw_path


def read_profile(directory, name: str) -> tuple[np.ndarray, dict]:
    directory = Path(directory)
    try:
        sidecar = json.loads((directory / f"{name}.json").read_text())
        data = (directory / f"{name}.f64").read_bytes()
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"profile {name} unreadable: {exc}") from exc
    if "n_p" not in sidecar or len(data) != 8 * int(sidecar["n_p"]):
        raise FormatError(f"payload has {len(data)} bytes, sidecar implies {8 * int(sidecar.get('n_p', 0))}")
    return np.frombuffer(data, dtype="<f8").astype(np.float64), sidecar
