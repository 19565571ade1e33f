"""Scenario configuration: JSON schema, defaults and resolution into model objects.

User-facing units: frequencies in Hz, intensities in W/cm^2, fields in tesla,
times in seconds.  Conversion to internal angular units happens here only.
"""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from . import constants as const
from .angular import MoleculeParams, NS2_PLUS, RotBasisState

SCHEMA_VERSION = 1
SCENARIOS = ("rabi", "gate-cz", "gate-sm", "readout", "decoherence", "sweep")
PRESET_ENV = "ROTQUBIT_PRESET_DIR"


class ConfigError(ValueError):
    """Configuration does not parse, validate or satisfy a physics precondition."""


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_prob = {"type": "number", "minimum": 0, "maximum": 1}
_int_pos = {"type": "integer", "minimum": 1}
_state = {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}
_opt_pos = {"anyOf": [_pos, {"type": "null"}]}

MOLECULE = _obj({"name": {"type": "string"}, "B0_hz": _pos, "delta_alpha_A3": _pos, "g_r": _num,
                 "mass_amu": {"anyOf": [_pos, {"type": "null"}]}})
MODE = _obj({"nu_hz": _pos, "n_max": {"type": "integer", "minimum": 2},
             "eta": {"type": "number", "minimum": 0, "exclusiveMaximum": 1}})
COMMON = {"scenario": {"enum": list(SCENARIOS)}, "schema_version": {"const": SCHEMA_VERSION},
          "seed": {"type": "integer", "minimum": 0}, "notes": {"type": "string"}}

BLOCKS = {
    "rabi": {
        "molecule": MOLECULE,
        "drive": _obj({
            "kind": {"enum": ["linear", "rotating"]},
            "intensity_w_cm2": _opt_pos, "rabi_over_omega0": _opt_pos,
            "phase": _num, "lower": _state, "upper": _state,
            "compensate_light_shift": {"type": "boolean"},
            "pulse_area": _opt_pos, "periods": _opt_pos,
        }),
        "initial": {"type": "array", "items": _state, "minItems": 1},
        "sim": _obj({"J_max": {"type": "integer", "minimum": 2}, "tol": _pos,
                     "frame": {"enum": ["interaction", "lab"]}, "rwa_cutoff_hz": _opt_pos,
                     "light_shift": {"type": "boolean"}, "samples": {"type": "integer", "minimum": 8}}),
    },
    "gate-cz": {
        "molecule": MOLECULE, "mode": MODE,
        "gate": _obj({"sideband_rabi_hz": _pos, "carrier_rabi_hz": _pos,
                      "light_shift": {"type": "boolean"}, "rwa_cutoff_hz": _opt_pos}),
        "sim": _obj({"J_max": {"type": "integer", "minimum": 2}, "tol": _pos}),
    },
    "gate-sm": {
        "molecule": MOLECULE, "mode": MODE,
        "gate": _obj({"delta_hz": _pos, "loops": _int_pos,
                      "n_bars": {"type": "array", "items": _nonneg, "minItems": 1},
                      "light_shift": {"type": "boolean"}, "rwa_cutoff_hz": _opt_pos}),
        "sim": _obj({"J_max": {"type": "integer", "minimum": 2}, "tol": _pos}),
    },
    "readout": {
        "molecule": MOLECULE,
        "atom": _obj({"bright_mean": _pos, "dark_mean": _nonneg, "threshold": {"type": "integer"}}),
        "readout": _obj({"repetitions": _int_pos, "pulse_infidelity": _prob, "cooling_error": _prob,
                         "prep_error": _prob, "read_state": _state,
                         "repetition_curve": {"type": "array", "items": _int_pos}}),
        "trials": _int_pos,
    },
    "decoherence": {
        "molecule": MOLECULE,
        "noise": _obj({"sigma_B_T": _nonneg, "tau_c_s": _pos}),
        "narrowing_tau_c_s": _opt_pos,
        "qubits": _obj({
            q: _obj({"kind": {"enum": ["electronic", "rotational"]}, "lower": _state, "upper": _state},
                    ["kind"])
            for q in ("a", "b")
        }),
        "m0_window_factor": _pos,
        "trials": _int_pos,
    },
    "sweep": {
        "base": {"type": "object"},
        "axes": {"type": "object", "minProperties": 1,
                 "additionalProperties": {"type": "array", "minItems": 1}},
    },
}


def scenario_schema(kind):
    props = dict(COMMON)
    props.update(BLOCKS[kind])
    return _obj(props, ["scenario"])


def published_schema():
    """JSON schema covering every scenario kind."""
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "rotqubit scenario",
        "oneOf": [
            {"allOf": [{"properties": {"scenario": {"const": k}}}, scenario_schema(k)]}
            for k in SCENARIOS
        ],
    }


_MOL = {"name": NS2_PLUS.name, "B0_hz": NS2_PLUS.B0, "delta_alpha_A3": NS2_PLUS.delta_alpha,
        "g_r": NS2_PLUS.g_r, "mass_amu": NS2_PLUS.mass_amu}
_MODE = {"nu_hz": 1e6, "n_max": 5, "eta": 0.1}

DEFAULTS = {
    "rabi": {
        "molecule": _MOL,
        "drive": {"kind": "linear", "intensity_w_cm2": None, "rabi_over_omega0": None, "phase": 0.0,
                  "lower": [0, 0], "upper": [2, 0], "compensate_light_shift": True,
                  "pulse_area": None, "periods": None},
        "initial": [[0, 0]],
        "sim": {"J_max": 16, "tol": 1e-9, "frame": "interaction", "rwa_cutoff_hz": None,
                "light_shift": True, "samples": 201},
        "seed": 0,
    },
    "gate-cz": {
        "molecule": _MOL, "mode": _MODE,
        "gate": {"sideband_rabi_hz": 2e4, "carrier_rabi_hz": 1e5, "light_shift": False,
                 "rwa_cutoff_hz": None},
        "sim": {"J_max": 4, "tol": 1e-9},
        "seed": 0,
    },
    "gate-sm": {
        "molecule": _MOL, "mode": dict(_MODE, n_max=36),
        "gate": {"delta_hz": 1e4, "loops": 1, "n_bars": [0.0, 0.5, 2.0], "light_shift": False,
                 "rwa_cutoff_hz": None},
        "sim": {"J_max": 4, "tol": 1e-5},
        "seed": 0,
    },
    "readout": {
        "molecule": _MOL,
        "atom": {"bright_mean": 20.0, "dark_mean": 0.5, "threshold": 5},
        "readout": {"repetitions": 1, "pulse_infidelity": 0.0, "cooling_error": 0.0,
                    "prep_error": 0.0, "read_state": [4, 0], "repetition_curve": []},
        "trials": 10000,
        "seed": 0,
    },
    "decoherence": {
        "molecule": _MOL,
        "noise": {"sigma_B_T": 1e-9, "tau_c_s": 1e12},
        "narrowing_tau_c_s": None,
        "qubits": {"a": {"kind": "electronic"},
                   "b": {"kind": "rotational", "lower": [2, -2], "upper": [2, 2]}},
        "m0_window_factor": 1e3,
        "trials": 2000,
        "seed": 0,
    },
    "sweep": {"seed": 0},
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("axes", "base"):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _validate(doc, schema):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None


def resolve(doc):
    """Validate a raw config document and fill in defaults; returns the resolved dict."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    kind = doc.get("scenario")
    if kind not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}, got {kind!r}")
    schema = scenario_schema(kind)
    _validate(doc, schema)
    out = _merge(DEFAULTS[kind], doc)
    out["schema_version"] = SCHEMA_VERSION
    _validate(out, schema)
    if kind == "sweep":
        out["base"] = resolve(out["base"])
        if out["base"]["scenario"] == "sweep":
            raise ConfigError("nested sweeps are not supported")
        for path, values in out["axes"].items():
            for v in values:
                if isinstance(v, float) and not math.isfinite(v):
                    raise ConfigError(f"axis {path} has a non-finite value")
                resolve(set_path(out["base"], path, v))
    else:
        build(out)  # every physics precondition surfaces here, before any simulation
    return out


def set_path(doc, path, value):
    out = copy.deepcopy(doc)
    keys = path.split(".")
    node = out
    for k in keys[:-1]:
        if k not in node or not isinstance(node[k], dict):
            raise ConfigError(f"sweep axis {path!r} does not name a config field")
        node = node[k]
    if keys[-1] not in node:
        raise ConfigError(f"sweep axis {path!r} does not name a config field")
    node[keys[-1]] = value
    return out


def load(path):
    """Read and resolve a config file; raises ConfigError or OSError."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return resolve(doc)


# --------------------------------------------------------------------------- model objects


@dataclass
class ScenarioConfig:
    """Resolved config plus the model objects it describes."""

    kind: str
    raw: dict
    objects: dict


def _state(pair, what):
    try:
        return RotBasisState(*pair)
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from None


def molecule_from(d):
    try:
        return MoleculeParams(d["name"], d["B0_hz"], d["delta_alpha_A3"], d["g_r"], d["mass_amu"])
    except ValueError as exc:
        raise ConfigError(f"molecule: {exc}") from None


def mode_from(d):
    from .motion import MotionalMode

    try:
        return MotionalMode(const.TWO_PI * d["nu_hz"], d["n_max"], d["eta"])
    except ValueError as exc:
        raise ConfigError(f"mode: {exc}") from None


def build(cfg):
    """Construct model objects; raises ConfigError for any violated precondition."""
    kind = cfg["scenario"]
    obj = {"molecule": molecule_from(cfg["molecule"])} if "molecule" in cfg else {}
    if kind == "rabi":
        d, s = cfg["drive"], cfg["sim"]
        if (d["intensity_w_cm2"] is None) == (d["rabi_over_omega0"] is None):
            raise ConfigError("drive: give exactly one of intensity_w_cm2, rabi_over_omega0")
        if d["pulse_area"] is not None and d["periods"] is not None:
            raise ConfigError("drive: give at most one of pulse_area, periods")
        if s["J_max"] % 2:
            raise ConfigError("sim.J_max must be even")
        lower, upper = _state(d["lower"], "drive.lower"), _state(d["upper"], "drive.upper")
        states = [_state(p, "initial") for p in cfg["initial"]]
        for st in [lower, upper] + states:
            if st.J % 2 or st.J > s["J_max"]:
                raise ConfigError(f"state {st} is outside the even-J basis with J_max={s['J_max']}")
        dm = 0 if d["kind"] == "linear" else 2
        if upper.M - lower.M != dm or upper.J <= lower.J:
            raise ConfigError(f"drive: {d['kind']} pair cannot drive {lower} -> {upper}")
        obj.update(lower=lower, upper=upper, initial=states)
    elif kind in ("gate-cz", "gate-sm"):
        obj["mode"] = mode_from(cfg["mode"])
        if obj["mode"].eta <= 0:
            raise ConfigError("mode.eta must be positive for sideband gates")
        if cfg["sim"]["J_max"] % 2:
            raise ConfigError("sim.J_max must be even")
        if kind == "gate-cz":
            if cfg["sim"]["J_max"] < 4:
                raise ConfigError("gate-cz needs J_max >= 4 to include the J = 4 neighbours of |aux>")
        elif obj["mode"].n_max < 5:
            raise ConfigError("gate-sm needs n_max >= 5")
    elif kind == "readout":
        from .readout import AtomicIonModel, ReadoutConfig

        a, r = cfg["atom"], cfg["readout"]
        try:
            obj["atom"] = AtomicIonModel(a["bright_mean"], a["dark_mean"], a["threshold"])
            obj["config"] = ReadoutConfig(r["repetitions"], r["pulse_infidelity"], r["cooling_error"],
                                          r["prep_error"], _state(r["read_state"], "read_state"))
        except ValueError as exc:
            raise ConfigError(f"readout: {exc}") from None
        if obj["config"].read_state.J % 2:
            raise ConfigError("read_state must have even J")
    elif kind == "decoherence":
        from .decoherence import NoiseProcess, electronic_qubit, rotational_qubit

        n = cfg["noise"]
        try:
            obj["noise"] = NoiseProcess(n["sigma_B_T"], n["tau_c_s"])
        except ValueError as exc:
            raise ConfigError(f"noise: {exc}") from None
        for q in ("a", "b"):
            spec = cfg["qubits"][q]
            if spec["kind"] == "electronic":
                obj[q] = electronic_qubit()
            else:
                if "lower" not in spec or "upper" not in spec:
                    raise ConfigError(f"qubits.{q}: rotational qubit needs lower and upper")
                obj[q] = rotational_qubit(obj["molecule"].g_r, _state(spec["lower"], "lower"),
                                          _state(spec["upper"], "upper"))
    return ScenarioConfig(kind, cfg, obj)


# --------------------------------------------------------------------------- presets


def preset_dir():
    env = os.environ.get(PRESET_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("rotqubit") / "presets"))


def list_presets():
    d = preset_dir()
    if not d.is_dir():
        return []
    return sorted(p.stem for p in d.glob("*.json"))


def preset_path(name):
    p = preset_dir() / f"{name}.json"
    if not p.is_file():
        raise ConfigError(f"no preset named {name!r} in {preset_dir()}")
    return p
