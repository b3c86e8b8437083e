"""Experiment configuration: YAML text -> validated :class:`ExperimentConfig`.

Frequencies are given in the same unit as ``model.G`` and times in its
inverse.  On ingest everything is rescaled so that G = 1; reported
frequencies are multiples of G and times multiples of 1/G.

Schema (all sections optional except where a kind requires them)::

    kind: memory-cycle          # commutators | spectrum | connection |
                                # passage | memory-cycle | finite-N-sweep
    seed: 0
    model:      {flavor: bosonic, G: 1.0, Omega: 0.5, N: null}
    sectors:    {M_max: 8}
    spectrum:   {draws: 20, G_range: [0.2, 3.0], Omega_range: [0.0, 3.0]}
    connection: {thetas: [0.1, 0.5, 1.0, 1.4], delta: 1.0e-5}
    tolerance:  {commutator: 1.0e-12, spectrum: 1.0e-10, dark: 1.0e-10,
                 connection: 1.0e-8}
    schedule:   {kind: cosine, omega_start: 10, omega_end: 0, duration: 2000,
                 stage: write}
    initial:    {m: 0, k: 0, n: 1}
    cycle:      {omega_high: 20, ramp_time: 3000, hold_time: 100,
                 write: <schedule>, hold: <schedule>, read: <schedule>}
    code:       {amplitudes: [1, 1], m: 0, partner: C}
    decay:      {gamma_a: 0.0}
    integrator: {dt: null, snapshots: 200}
    sweep:      {Ns: [4, 8, 16, 32, 64]}
    output:     {dir: null, figures: true, full_states: false}

Complex code amplitudes may be written as ``[re, im]`` pairs.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import yaml

KINDS = ("commutators", "spectrum", "connection", "passage", "memory-cycle", "finite-N-sweep")
VERIFICATION_KINDS = ("commutators", "spectrum", "connection")

_NUM = (int, float)

# section -> key -> (types, default)
SCHEMA: Dict[str, Dict[str, tuple]] = {
    "model": {"flavor": (str, "bosonic"), "G": (_NUM, 1.0), "Omega": (_NUM, 0.0),
              "N": ((int, type(None)), None)},
    "sectors": {"M_max": (int, 6)},
    "spectrum": {"draws": (int, 20), "G_range": (list, [0.2, 3.0]),
                 "Omega_range": (list, [0.0, 3.0])},
    "connection": {"thetas": (list, [0.1, 0.5, 1.0, 1.4]), "delta": (_NUM, 1e-5)},
    "tolerance": {"commutator": (_NUM, 1e-12), "spectrum": (_NUM, 1e-10),
                  "dark": (_NUM, 1e-10), "connection": (_NUM, 1e-8)},
    "schedule": {"kind": (str, "cosine"), "omega_start": (_NUM, 10.0),
                 "omega_end": (_NUM, 0.0), "duration": (_NUM, 2000.0),
                 "times": ((list, type(None)), None), "values": ((list, type(None)), None),
                 "stage": ((str, type(None)), None)},
    "initial": {"m": (int, 0), "k": (int, 0), "n": (int, 1)},
    "cycle": {"omega_high": (_NUM, 20.0), "ramp_time": (_NUM, 3000.0), "hold_time": (_NUM, 100.0),
              "write": ((dict, type(None)), None), "hold": ((dict, type(None)), None),
              "read": ((dict, type(None)), None)},
    "code": {"amplitudes": (list, [1.0, 1.0]), "m": (int, 0), "partner": (str, "C")},
    "decay": {"gamma_a": (_NUM, 0.0)},
    "integrator": {"dt": ((float, int, type(None)), None), "snapshots": (int, 200)},
    "sweep": {"Ns": (list, [4, 8, 16, 32, 64])},
    "output": {"dir": ((str, type(None)), None), "figures": (bool, True),
               "full_states": (bool, False)},
}
TOP_LEVEL = {"kind": str, "seed": int}
STAGE_KEYS = {"kind", "omega_start", "omega_end", "duration", "times", "values"}
SCHEDULE_KINDS = ("linear", "cosine", "hold", "samples")

# kind -> sections whose presence is required
REQUIRED = {
    "passage": ("schedule",),
    "memory-cycle": ("code",),
    "finite-N-sweep": ("code", "sweep"),
}

# fields rescaled by G (frequency) or 1/G (time)
FREQ_FIELDS = [("model", "Omega"), ("schedule", "omega_start"), ("schedule", "omega_end"),
               ("cycle", "omega_high"), ("decay", "gamma_a")]
TIME_FIELDS = [("schedule", "duration"), ("cycle", "ramp_time"), ("cycle", "hold_time"),
               ("integrator", "dt")]


class ConfigError(ValueError):
    """Carries every validation problem found, not just the first."""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.errors))


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    sections: Dict[str, Dict[str, Any]]
    G_input: float
    raw: Dict[str, Any] = field(repr=False, default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def __getitem__(self, section: str) -> Dict[str, Any]:
        return self.sections[section]

    def get(self, path: str):
        section, key = path.split(".", 1)
        return self.sections[section][key]

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "G_input": self.G_input,
                **copy.deepcopy(self.sections)}


def _is_num(x) -> bool:
    return isinstance(x, _NUM) and not isinstance(x, bool)


def _type_ok(value, types) -> bool:
    types = types if isinstance(types, tuple) else (types,)
    if value is None:
        return type(None) in types
    if _is_num(value) and (float in types or int in types) and (float in types or isinstance(value, int)):
        return True
    return any(isinstance(value, t) and not (t in _NUM and isinstance(value, bool))
               for t in types if t not in (type(None),))


def _check_stage(name: str, spec, errors: List[str], strict: bool, warns: List[str]):
    if not isinstance(spec, dict):
        errors.append(f"{name}: expected a mapping")
        return
    for key in spec:
        if key not in STAGE_KEYS:
            (errors if strict else warns).append(f"{name}: unknown key '{key}'")
    kind = spec.get("kind", "cosine")
    if kind not in SCHEDULE_KINDS:
        errors.append(f"{name}.kind: must be one of {SCHEDULE_KINDS}, got {kind!r}")
    if kind == "samples":
        t, v = spec.get("times"), spec.get("values")
        if not isinstance(t, list) or not isinstance(v, list) or len(t) != len(v) or len(t) < 2:
            errors.append(f"{name}: sampled schedule needs equal-length 'times' and 'values' (>= 2)")
        elif any(not _is_num(x) for x in t + v):
            errors.append(f"{name}: sample times/values must be numbers")
        elif any(x < 0 for x in v):
            errors.append(f"{name}: Rabi frequency samples must be non-negative")
        return
    for key in ("omega_start", "omega_end", "duration"):
        if key in spec:
            if not _is_num(spec[key]):
                errors.append(f"{name}.{key}: must be a number")
            elif spec[key] < 0:
                errors.append(f"{name}.{key}: must be non-negative")
    if kind != "hold" and "duration" not in spec:
        errors.append(f"{name}.duration: required")


def parse_config(text: str, strict: bool = True, kind: Optional[str] = None) -> ExperimentConfig:
    """Validate YAML ``text``; ``kind`` fills in or must match the file's kind."""
    errors: List[str] = []
    warns: List[str] = []
    try:
        raw = yaml.safe_load(text) if text and text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError([f"unparseable config: {exc}"]) from None
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError(["top level must be a mapping"])

    for key in raw:
        if key not in TOP_LEVEL and key not in SCHEMA:
            (errors if strict else warns).append(f"unknown key '{key}'")

    file_kind = raw.get("kind")
    if kind is not None and file_kind is not None and kind != file_kind:
        errors.append(f"kind: config says {file_kind!r} but {kind!r} was requested")
    exp_kind = file_kind if file_kind is not None else kind
    if exp_kind is None:
        errors.append("kind: required")
    elif exp_kind not in KINDS:
        errors.append(f"kind: must be one of {KINDS}, got {exp_kind!r}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        errors.append("seed: must be an integer")

    sections: Dict[str, Dict[str, Any]] = {}
    for sec, keys in SCHEMA.items():
        given = raw.get(sec, {})
        if given is None:
            given = {}
        if not isinstance(given, dict):
            errors.append(f"{sec}: expected a mapping")
            given = {}
        for key in given:
            if key not in keys:
                (errors if strict else warns).append(f"unknown key '{sec}.{key}'")
        out = {}
        for key, (types, default) in keys.items():
            value = given.get(key, copy.deepcopy(default))
            if not _type_ok(value, types):
                errors.append(f"{sec}.{key}: wrong type {type(value).__name__}")
            out[key] = value
        sections[sec] = out

    for sec in REQUIRED.get(exp_kind, ()):
        if sec not in raw:
            errors.append(f"{sec}: required for kind {exp_kind!r}")

    m = sections["model"]
    if m["flavor"] not in ("bosonic", "dicke"):
        errors.append(f"model.flavor: must be 'bosonic' or 'dicke', got {m['flavor']!r}")
    if _is_num(m["G"]) and not m["G"] > 0:
        errors.append("model.G: collective coupling must be positive")
    if _is_num(m["Omega"]) and m["Omega"] < 0:
        errors.append("model.Omega: Rabi frequency must be non-negative")
    if m["flavor"] == "dicke" and exp_kind not in ("finite-N-sweep",):
        if m["N"] is None:
            errors.append("model.N: required for the Dicke flavor")
    if isinstance(m["N"], int) and m["N"] < 1:
        errors.append("model.N: atom count must be >= 1")
    if isinstance(sections["sectors"]["M_max"], int) and not 0 <= sections["sectors"]["M_max"] <= 10:
        errors.append("sectors.M_max: must lie in [0, 10]")
    if _is_num(sections["decay"]["gamma_a"]) and sections["decay"]["gamma_a"] < 0:
        errors.append("decay.gamma_a: decay rate must be non-negative")
    dt = sections["integrator"]["dt"]
    if dt is not None and _is_num(dt) and dt <= 0:
        errors.append("integrator.dt: must be positive")
    if isinstance(sections["integrator"]["snapshots"], int) and sections["integrator"]["snapshots"] < 1:
        errors.append("integrator.snapshots: must be >= 1")
    delta = sections["connection"]["delta"]
    if _is_num(delta) and not 1e-6 <= delta <= 1e-4:
        errors.append("connection.delta: must lie in [1e-6, 1e-4]")
    if isinstance(sections["spectrum"]["draws"], int) and sections["spectrum"]["draws"] < 1:
        errors.append("spectrum.draws: must be >= 1")
    for rng_key in ("G_range", "Omega_range"):
        r = sections["spectrum"][rng_key]
        if not (isinstance(r, list) and len(r) == 2 and all(_is_num(x) for x in r) and r[0] <= r[1]):
            errors.append(f"spectrum.{rng_key}: must be [low, high]")
    if min(sections["spectrum"]["G_range"] or [1]) <= 0:
        errors.append("spectrum.G_range: G draws must be positive")

    code = sections["code"]
    amps = code["amplitudes"]
    if isinstance(amps, list):
        if not amps:
            errors.append("code.amplitudes: must not be empty")
        for a in amps:
            ok = _is_num(a) or (isinstance(a, list) and len(a) == 2 and all(_is_num(x) for x in a))
            if not ok:
                errors.append(f"code.amplitudes: entry {a!r} is neither a number nor [re, im]")
                break
        else:
            if amps and all(_complex(a) == 0 for a in amps):
                errors.append("code.amplitudes: all zero")
    if isinstance(code["m"], int) and code["m"] < 0:
        errors.append("code.m: pairing order must be >= 0")
    if code["partner"] not in ("C", "a"):
        errors.append("code.partner: must be 'C' or 'a'")

    ns = sections["sweep"]["Ns"]
    if isinstance(ns, list) and (not ns or any(not isinstance(n, int) or n < 1 for n in ns)):
        errors.append("sweep.Ns: must be a non-empty list of positive integers")

    if exp_kind == "passage" or "schedule" in raw:
        _check_stage("schedule", raw.get("schedule", {}) or {}, errors, strict, warns)
        sch = sections["schedule"]
        if sch.get("stage") == "write" and _is_num(sch["omega_end"]) and _is_num(sch["omega_start"]) \
                and sch["omega_end"] > sch["omega_start"]:
            warns.append("schedule: write stage with omega_end > omega_start (legal but unusual)")
    cyc = sections["cycle"]
    for stage in ("write", "hold", "read"):
        if cyc[stage] is not None:
            _check_stage(f"cycle.{stage}", cyc[stage], errors, strict, warns)
    w = cyc["write"]
    if isinstance(w, dict) and _is_num(w.get("omega_end", 0)) and _is_num(w.get("omega_start", 0)) \
            and w.get("omega_end", 0) > w.get("omega_start", 0):
        warns.append("cycle.write: omega_end > omega_start on a write stage (legal but unusual)")
    for key in ("omega_high", "ramp_time", "hold_time"):
        if _is_num(cyc[key]) and cyc[key] < 0:
            errors.append(f"cycle.{key}: must be non-negative")
    out = sections["output"]

    if errors:
        raise ConfigError(errors)
    for msg in warns:
        warnings.warn(msg, stacklevel=2)

    G = float(m["G"])
    sections = _rescale(sections, G)
    return ExperimentConfig(exp_kind, seed, sections, G, raw, warns)


def _complex(a) -> complex:
    return complex(a[0], a[1]) if isinstance(a, list) else complex(a)


def code_amplitudes(cfg: ExperimentConfig):
    return [_complex(a) for a in cfg["code"]["amplitudes"]]


def _rescale(sections, G: float):
    s = copy.deepcopy(sections)
    if G == 1.0:
        return s
    s["model"]["G"] = 1.0
    for sec, key in FREQ_FIELDS:
        if s[sec][key] is not None:
            s[sec][key] = s[sec][key] / G
    for sec, key in TIME_FIELDS:
        if s[sec][key] is not None:
            s[sec][key] = s[sec][key] * G
    sch = s["schedule"]
    if sch["times"] is not None:
        sch["times"] = [t * G for t in sch["times"]]
        sch["values"] = [v / G for v in sch["values"]]
    for stage in ("write", "hold", "read"):
        st = s["cycle"][stage]
        if st is None:
            continue
        for key in ("omega_start", "omega_end"):
            if key in st:
                st[key] = st[key] / G
        if "duration" in st:
            st["duration"] = st["duration"] * G
        if st.get("times") is not None:
            st["times"] = [t * G for t in st["times"]]
            st["values"] = [v / G for v in st["values"]]
    return s


def load_config(path, strict: bool = True, kind: Optional[str] = None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), strict=strict, kind=kind)


def set_path(raw: dict, path: str, value) -> dict:
    """Copy of ``raw`` with dotted ``path`` set to ``value``."""
    out = copy.deepcopy(raw)
    node = out
    parts = path.split(".")
    for p in parts[:-1]:
        if node.get(p) is None:
            node[p] = {}
        node = node[p]
    node[parts[-1]] = value
    return out


def get_path(cfg: ExperimentConfig, path: str):
    parts = path.split(".")
    if len(parts) == 1:
        if path in TOP_LEVEL:
            return getattr(cfg, path)
        raise KeyError(path)
    section, key = parts[0], ".".join(parts[1:])
    if section not in SCHEMA or key not in SCHEMA[section]:
        raise KeyError(path)
    return cfg.sections[section][key]
