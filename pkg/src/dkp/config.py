"""JSON run configuration: schema validation and conversion to library objects."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import jsonschema

from .diagnostics import DEFAULT_TOLERANCES
from .errors import BadConfig
from .evolve import FlowSpec
from .grid import GaussianProduct, PhaseGrid, make_grid
from .hierarchy import DensitySpec, PowerLaw
from .hodograph import KDensity, MuFactor, NuFactor, SeparableTerm, SolverOptions

__all__ = ["RunConfig", "SCHEMA", "parse_config", "load_config", "density_from_dict", "k_density_from_dict"]

_NUMBER = {"type": "number"}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_COUNT = {"type": "integer", "minimum": 1}
_PAIR = {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}

_GAUSSIAN = {
    "type": "object",
    "properties": {
        "amplitude": _NUMBER,
        "x_width": _POSITIVE,
        "p_width": _POSITIVE,
        "x_center": _NUMBER,
        "p_center": _NUMBER,
    },
    "required": ["amplitude"],
    "additionalProperties": False,
}

_DENSITY = {
    "type": "object",
    "properties": {
        "h": {
            "type": "object",
            "properties": {"power": {"type": "integer", "minimum": 1}},
            "required": ["power"],
            "additionalProperties": False,
        },
        "n": {"type": "integer", "minimum": 0},
    },
    "required": ["h", "n"],
    "additionalProperties": False,
}

_K_TERM = {
    "type": "object",
    "properties": {
        "coeff": _NUMBER,
        "mu": {
            "type": "object",
            "properties": {"kind": {"enum": ["power", "xlogx"]}, "m": {"type": "integer", "minimum": 1}},
            "required": ["kind"],
            "additionalProperties": False,
        },
        "nu": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["power", "gauss"]},
                "n": {"type": "integer", "minimum": 0},
                "c": _NUMBER,
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
    },
    "required": ["coeff", "mu", "nu"],
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "properties": {
        "grid": {
            "type": "object",
            "properties": {
                "x_min": _NUMBER,
                "x_max": _NUMBER,
                "n_x": {"type": "integer", "minimum": 8},
                "p_min": _NUMBER,
                "p_max": _NUMBER,
                "n_p": {"type": "integer", "minimum": 8},
            },
            "required": ["x_min", "x_max", "n_x", "p_min", "p_max", "n_p"],
            "additionalProperties": False,
        },
        "initial": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["gaussian", "sum", "zero"]},
                "gaussian": _GAUSSIAN,
                "terms": {"type": "array", "items": _GAUSSIAN, "minItems": 1},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "flow": {
            "type": "object",
            "properties": {"kind": {"enum": ["benney", "second", "general"]}, "general": _DENSITY},
            "required": ["kind"],
            "additionalProperties": False,
        },
        "time": {
            "type": "object",
            "properties": {
                "t_end": {"type": "number", "minimum": 0},
                "dt": _POSITIVE,
                "monitor_every": _COUNT,
            },
            "additionalProperties": False,
        },
        "densities": {"type": "array", "items": _DENSITY},
        "checks": {
            "type": "object",
            "propertyNames": {"enum": sorted(DEFAULT_TOLERANCES)},
            "additionalProperties": _POSITIVE,
        },
        "output": {
            "type": "object",
            "properties": {"snapshot_stride": _COUNT, "probes": {"type": "array", "items": _NUMBER}},
            "additionalProperties": False,
        },
        "frobenius": {
            "type": "object",
            "properties": {"x": _NUMBER, "samples": _COUNT, "seed": {"type": "integer", "minimum": 0}},
            "additionalProperties": False,
        },
        "hodograph": {
            "type": "object",
            "properties": {
                "k": {
                    "type": "object",
                    "properties": {"terms": {"type": "array", "items": _K_TERM, "minItems": 1}},
                    "required": ["terms"],
                    "additionalProperties": False,
                },
                "points": {
                    "type": "array",
                    "items": {"type": "array", "items": _NUMBER, "minItems": 3, "maxItems": 3},
                    "minItems": 1,
                },
                "initial": {
                    "type": "object",
                    "properties": {"amplitude": _NUMBER, "width": _POSITIVE},
                    "additionalProperties": False,
                },
                "solver": {
                    "type": "object",
                    "properties": {
                        "max_iter": _COUNT,
                        "tol": _POSITIVE,
                        "eps": _POSITIVE,
                        "armijo": _POSITIVE,
                        "min_step": _POSITIVE,
                        "relaxation": _POSITIVE,
                        "fallback_iter": _COUNT,
                        "cond_limit": _POSITIVE,
                    },
                    "additionalProperties": False,
                },
                "warm_start": {"type": "boolean"},
                "log_variable": {"type": "boolean"},
                "stencil": {
                    "type": "object",
                    "properties": {
                        "point": {"type": "array", "items": _NUMBER, "minItems": 3, "maxItems": 3},
                        "spacing": _POSITIVE,
                    },
                    "required": ["point", "spacing"],
                    "additionalProperties": False,
                },
            },
            "required": ["k", "points"],
            "additionalProperties": False,
        },
        "invariants": {
            "type": "object",
            "properties": {"snapshot_dir": {"type": "string"}},
            "additionalProperties": False,
        },
        "coords": {
            "type": "object",
            "properties": {
                "x": _NUMBER,
                "window": _PAIR,
                "alpha": {
                    "type": "object",
                    "properties": {"range": _PAIR, "nodes": {"type": "integer", "minimum": 2}},
                    "additionalProperties": False,
                },
                "alpha0": _NUMBER,
                "flat": {
                    "type": "object",
                    "properties": {"branch": _PAIR, "mu": {"type": "array", "items": _NUMBER, "minItems": 1}},
                    "required": ["branch", "mu"],
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
    },
    "required": ["grid"],
    "additionalProperties": False,
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Validated configuration; sub-blocks not converted to objects stay as dicts."""

    grid: PhaseGrid
    initial: object
    flow: FlowSpec
    time: dict
    densities: tuple | None
    checks: dict | None
    output: dict
    blocks: dict = field(default_factory=dict)


def _path(parts) -> str:
    return ".".join(str(p) for p in parts)


def _describe(error: jsonschema.ValidationError) -> str:
    where = list(error.absolute_path)
    kind, value = error.validator, error.validator_value
    if kind == "required":
        missing = [name for name in value if name not in error.instance]
        return f"{_path(where + [missing[0]])}: required"
    messages = {
        "minimum": f"must be ≥ {value}",
        "exclusiveMinimum": f"must be > {value}",
        "type": f"must be of type {value}",
        "enum": f"must be one of {value}",
        "minItems": f"needs at least {value} items",
        "maxItems": f"allows at most {value} items",
    }
    message = messages.get(kind, error.message)
    return f"{_path(where) or '<root>'}: {message}"


def density_from_dict(block: dict) -> DensitySpec:
    return DensitySpec(PowerLaw(block["h"]["power"]), block["n"])


def k_density_from_dict(block: dict) -> KDensity:
    terms = []
    for term in block["terms"]:
        mu = MuFactor(term["mu"]["kind"], term["mu"].get("m", 1))
        nu = NuFactor(term["nu"]["kind"], term["nu"].get("n", 0), term["nu"].get("c", 0.0))
        terms.append(SeparableTerm(float(term["coeff"]), mu, nu))
    return KDensity(tuple(terms))


def _initial(block: dict | None):
    if block is None:
        return GaussianProduct(-0.5)
    kind = block["kind"]
    if kind == "zero":
        return None
    if kind == "gaussian":
        if "gaussian" not in block:
            raise BadConfig("initial.gaussian: required")
        return GaussianProduct(**block["gaussian"])
    if "terms" not in block:
        raise BadConfig("initial.terms: required")
    return [GaussianProduct(**term) for term in block["terms"]]


def _flow(block: dict | None) -> FlowSpec:
    if block is None or block["kind"] == "benney":
        return FlowSpec.benney()
    if block["kind"] == "second":
        return FlowSpec.second()
    if "general" not in block:
        raise BadConfig("flow.general: required")
    return FlowSpec.general(density_from_dict(block["general"]))


TIME_DEFAULTS = {"t_end": 0.5, "dt": 1.0 / 512, "monitor_every": 1}


def _time(block: dict | None) -> dict:
    out = {**TIME_DEFAULTS, **(block or {})}
    steps = round(out["t_end"] / out["dt"])
    if abs(steps * out["dt"] - out["t_end"]) > 1e-9 * max(1.0, out["t_end"]):
        raise BadConfig("time.dt: t_end must be an integer multiple of dt")
    return out


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON configuration.

    Raises
    ------
    BadConfig
        With a dotted field path, e.g. ``"grid: required"`` or ``"time.dt: must be > 0"``.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadConfig(f"<root>: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(raw, dict):
        raise BadConfig("<root>: must be a JSON object")
    error = jsonschema.exceptions.best_match(_VALIDATOR.iter_errors(raw))
    if error is not None:
        raise BadConfig(_describe(error))
    g = raw["grid"]
    grid = make_grid(g["x_min"], g["x_max"], g["n_x"], g["p_min"], g["p_max"], g["n_p"])
    densities = raw.get("densities")
    blocks = {name: raw[name] for name in ("frobenius", "hodograph", "coords", "invariants") if name in raw}
    if "hodograph" in blocks:
        hod = blocks["hodograph"]
        k_density_from_dict(hod["k"])
        SolverOptions(**hod.get("solver", {}))
    return RunConfig(
        grid=grid,
        initial=_initial(raw.get("initial")),
        flow=_flow(raw.get("flow")),
        time=_time(raw.get("time")),
        densities=None if densities is None else tuple(density_from_dict(d) for d in densities),
        checks=raw.get("checks"),
        output={"snapshot_stride": None, "probes": [0.0], **raw.get("output", {})},
        blocks=blocks,
    )


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as handle:
        return parse_config(handle.read())
