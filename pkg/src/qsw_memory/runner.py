"""Experiment dispatch, output files and the run manifest."""

from __future__ import annotations

import copy
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import yaml

from . import __version__, plotting
from .algebra import EXACT_DICKE_RELATIONS, ModelParams, commutator_report, get_model, op_norm
from .config import (
    VERIFICATION_KINDS,
    ConfigError,
    ExperimentConfig,
    code_amplitudes,
    get_path,
    parse_config,
    set_path,
)
from .dynamics import DecayConfig, IntegratorConfig, adiabaticity_trace, evolve
from .fock import Flavor, enumerate_sector
from .protocol import CycleSchedule, PairedStateSpec, PhotonCode, run_memory_cycle
from .schedules import PulseSchedule
from .spectrum import DressedLabel, connection_matrix, dark_projector, dressed_state, sector_spectrum

log = logging.getLogger(__name__)

OUTPUT_ENV = "QSW_MEMORY_OUT"
DEFAULT_OUTPUT_ROOT = "qsw_runs"


class ExperimentError(RuntimeError):
    """A downstream failure, tagged with the stage that raised it."""

    def __init__(self, stage: str, exc: BaseException):
        self.stage = stage
        self.cause = exc
        super().__init__(f"[{stage}] {type(exc).__name__}: {exc}")


def output_root(explicit: Optional[str] = None) -> Path:
    return Path(explicit or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT_ROOT)


@dataclass
class RunManifest:
    config_hash: str
    version: str
    kind: str
    wall_time: float = 0.0
    runs: List[dict] = field(default_factory=list)
    files: List[str] = field(default_factory=list)
    summary: Optional[List[dict]] = None

    @property
    def passed(self) -> bool:
        return all(r["status"] != "fail" for r in self.runs)

    @property
    def exit_code(self) -> int:
        """Nonzero iff a verification-kind run misses its tolerance."""
        return 0 if all(r["status"] != "fail" or r["kind"] not in VERIFICATION_KINDS for r in self.runs) else 1

    def to_dict(self) -> dict:
        out = {"config_hash": self.config_hash, "version": self.version, "kind": self.kind,
               "wall_time": self.wall_time, "runs": self.runs, "files": sorted(self.files)}
        if self.summary is not None:
            out["summary"] = self.summary
        return out

    def write(self, out_dir: Path) -> Path:
        path = Path(out_dir) / "manifest.json"
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
        return path


class _Writer:
    """Collects every file an experiment emits."""

    def __init__(self, out_dir: Path, figures: bool):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.figures = figures
        self.files: List[str] = []

    def _track(self, path: Path) -> Path:
        self.files.append(str(path.relative_to(self.out)))
        return path

    def json(self, name: str, payload) -> Path:
        path = self.out / name
        with open(path, "w") as fh:
            json.dump(_jsonable(payload), fh, indent=1, sort_keys=True)
        return self._track(path)

    def csv(self, name: str, header: Sequence[str], rows) -> Path:
        path = self.out / name
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(f"{float(x):.17g}" for x in row) + "\n")
        return self._track(path)

    def figure(self, fn, name: str, *args, **kw) -> Optional[Path]:
        if not self.figures:
            return None
        path = self.out / name
        fn(*args, path, **kw)
        return self._track(path)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, complex):
        return {"real": x.real, "imag": x.imag}
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _flavor_params(cfg: ExperimentConfig):
    m = cfg["model"]
    flavor = Flavor.coerce(m["flavor"])
    N = m["N"] if flavor is Flavor.DICKE else None
    return flavor, ModelParams(1.0, float(m["Omega"]), N)


def _stage_schedule(spec: dict) -> PulseSchedule:
    kind = spec.get("kind", "cosine")
    if kind == "samples":
        return PulseSchedule.samples(spec["times"], spec["values"])
    if kind == "hold":
        return PulseSchedule.hold(float(spec.get("omega_start", 0.0)), float(spec.get("duration", 0.0)))
    build = PulseSchedule.cosine if kind == "cosine" else PulseSchedule.linear
    return build(float(spec.get("omega_start", 0.0)), float(spec.get("omega_end", 0.0)), float(spec["duration"]))


def cycle_schedule(cfg: ExperimentConfig) -> CycleSchedule:
    c = cfg["cycle"]
    base = CycleSchedule.cosine(1.0, float(c["omega_high"]), float(c["ramp_time"]), float(c["hold_time"]))
    return CycleSchedule(
        _stage_schedule(c["write"]) if c["write"] else base.write,
        _stage_schedule(c["hold"]) if c["hold"] else base.hold,
        _stage_schedule(c["read"]) if c["read"] else base.read,
    )


def _decay(cfg) -> Optional[DecayConfig]:
    g = float(cfg["decay"]["gamma_a"])
    return DecayConfig(g) if g > 0 else None


# ---------------------------------------------------------------- kinds


def _run_commutators(cfg, w: _Writer) -> dict:
    flavor, params = _flavor_params(cfg)
    tol = cfg["tolerance"]["commutator"]
    model = get_model(flavor, params.N)
    checked = None if flavor is Flavor.BOSONIC else set(EXACT_DICKE_RELATIONS)
    report, worst = {}, 0.0
    for M in range(cfg["sectors"]["M_max"] + 1):
        rep = commutator_report(flavor, params, model.sector(M))
        report[M] = rep
        for name, v in rep.items():
            if checked is None or name in checked:
                worst = max(worst, v)
    finite_N = {}
    if flavor is Flavor.DICKE:
        # size of the 1/N corrections to the bosonic relations
        for name in ("[A,A+]-1", "[C,C+]-1"):
            finite_N[name] = max(report[M][name] for M in report)
    w.json("commutators.json", {"flavor": flavor.value, "N": params.N, "tolerance": tol,
                                "checked": sorted(checked) if checked else "all",
                                "sectors": report, "finite_N_deviation": finite_N, "max_residual": worst})
    w.figure(plotting.plot_commutators, "commutators.png", report)
    return {"status": "pass" if worst < tol else "fail", "max_residual": worst}


def _run_spectrum(cfg, w: _Writer) -> dict:
    rng = np.random.default_rng(cfg.seed)
    s = cfg["spectrum"]
    tol, dark_tol = cfg["tolerance"]["spectrum"], cfg["tolerance"]["dark"]
    M_max = cfg["sectors"]["M_max"]
    reports, failures, worst_dark = [], [], 0.0
    for draw in range(s["draws"]):
        G = float(rng.uniform(*s["G_range"]))
        Om = float(rng.uniform(*s["Omega_range"]))
        params = ModelParams(G, Om)
        H_model = get_model(Flavor.BOSONIC).hamiltonian(params)
        for M in range(M_max + 1):
            rep = sector_spectrum(params, M, match_tol=tol)
            P = dark_projector(math.atan2(G, Om), enumerate_sector(Flavor.BOSONIC, M))
            dark = op_norm(H_model.block(M) @ P)
            worst_dark = max(worst_dark, dark)
            d = rep.to_dict()
            d.update(draw=draw, G=G, Omega=Om, epsilon=rep.epsilon, dark_annihilation=dark)
            reports.append(d)
            failures += rep.failures
            if dark > dark_tol * max(rep.epsilon, 1.0):
                failures.append(f"draw {draw} M={M}: |H P_dark| = {dark:.3e}")
    w.json("spectrum.json", {"seed": cfg.seed, "reports": reports, "failures": failures,
                             "max_dark_annihilation": worst_dark})
    w.figure(plotting.plot_spectrum, "spectrum.png", reports)
    return {"status": "fail" if failures else "pass", "failures": len(failures),
            "max_dark_annihilation": worst_dark}


def _run_connection(cfg, w: _Writer) -> dict:
    c = cfg["connection"]
    tol = cfg["tolerance"]["connection"]
    delta = float(c["delta"])
    M_max = min(cfg["sectors"]["M_max"], 6)
    blocks, ok = [], True
    worst_dd, worst_consistency, best_db = 0.0, 0.0, 0.0
    for theta in c["thetas"]:
        for M in range(M_max + 1):
            cm = connection_matrix(float(theta), M, delta)
            half = connection_matrix(float(theta), M, max(delta / 2, 1e-6))
            consistency = float(np.max(np.abs(cm.matrix - half.matrix))) if cm.matrix.size else 0.0
            d = cm.to_dict()
            d.update(delta_halving_change=consistency)
            blocks.append(d)
            worst_dd = max(worst_dd, cm.max_dark_dark)
            worst_consistency = max(worst_consistency, consistency)
            best_db = max(best_db, cm.max_dark_bright)
    # delta-halving: O(delta^2) truncation shrinks, so both estimates agree to the tolerance
    ok = worst_dd < tol and worst_consistency < tol and best_db > 1e-3
    w.json("connection.json", {"delta": delta, "blocks": blocks, "max_dark_dark": worst_dd,
                               "max_delta_halving_change": worst_consistency,
                               "max_dark_bright": best_db})
    per_theta = []
    for theta in c["thetas"]:
        sel = [b for b in blocks if b["theta"] == theta]
        per_theta.append({"theta": theta, "max_dark_dark": max(b["max_dark_dark"] for b in sel),
                          "max_dark_bright": max(b["max_dark_bright"] for b in sel)})
    w.figure(plotting.plot_connection, "connection.png", per_theta)
    return {"status": "pass" if ok else "fail", "max_dark_dark": worst_dd,
            "max_dark_bright": best_db, "max_delta_halving_change": worst_consistency}


def _trajectory_columns(tr) -> Dict[str, np.ndarray]:
    names = ("n_ph", "n_A", "n_C")
    return {"t": tr.times, "norm": tr.norm, names[0]: tr.n_ph, names[1]: tr.n_1,
            names[2]: tr.n_2, "P_dark": tr.p_dark, "omega": tr.omega}


CSV_COLUMNS = ("t", "norm", "n_ph", "n_A", "n_C", "P_dark")


def _write_trajectory(w: _Writer, stem: str, cols: dict, title: str = ""):
    w.csv(f"{stem}.csv", CSV_COLUMNS, zip(*(cols[c] for c in CSV_COLUMNS)))
    w.figure(plotting.plot_trajectory, f"{stem}.png", cols, title=title)


def _run_passage(cfg, w: _Writer) -> dict:
    flavor, params = _flavor_params(cfg)
    sched = _stage_schedule(cfg["schedule"])
    lab = DressedLabel(**cfg["initial"])
    theta0 = math.atan2(1.0, sched.start_value)
    psi0 = dressed_state(lab, theta0)
    if flavor is Flavor.DICKE:
        from .protocol import _bosonic_to
        psi0 = _bosonic_to(flavor, params.N, psi0).normalized()
    tr = evolve(flavor, params, sched, psi0,
                IntegratorConfig(dt=cfg["integrator"]["dt"], snapshots=cfg["integrator"]["snapshots"]),
                _decay(cfg))
    trace = adiabaticity_trace(params, sched)
    final = tr.final
    theta1 = math.atan2(1.0, sched.end_value)
    overlap = None
    if flavor is Flavor.BOSONIC:
        overlap = abs(np.vdot(dressed_state(lab, theta1).amplitudes, final.amplitudes)) ** 2
    cols = _trajectory_columns(tr)
    _write_trajectory(w, "trajectory", cols, title=f"start in e{lab}")
    payload = tr.to_dict(include_states=cfg["output"]["full_states"])
    payload.update(initial=str(lab), max_eta=trace.max_eta, transported_overlap=overlap,
                   final_dark_loss=float(tr.norm[-1] ** 2 - tr.p_dark[-1]))
    w.json("trajectory.json", payload)
    return {"status": "ok", "max_eta": trace.max_eta, "P_dark_final": float(tr.p_dark[-1]),
            "transported_overlap": overlap}


def _memory_series(res) -> dict:
    offset, cols = 0.0, {k: [] for k in CSV_COLUMNS + ("omega",)}
    for stage in ("write", "hold", "read"):
        trs = res.trajectories[stage]
        first = next(iter(trs.values()))
        agg = {
            "t": first.times + offset,
            "norm": np.sqrt(sum(tr.norm ** 2 for tr in trs.values())),
            "n_ph": sum(tr.n_ph for tr in trs.values()),
            "n_A": sum(tr.n_1 for tr in trs.values()),
            "n_C": sum(tr.n_2 for tr in trs.values()),
            "P_dark": sum(tr.p_dark for tr in trs.values()),
            "omega": first.omega,
        }
        skip = 1 if offset > 0 else 0
        for k in cols:
            cols[k].append(np.asarray(agg[k])[skip:])
        offset += first.times[-1]
    return {k: np.concatenate(v) for k, v in cols.items()}


def _cycle_inputs(cfg):
    amps = code_amplitudes(cfg)
    code = PhotonCode.from_amplitudes(amps)
    paired = PairedStateSpec(cfg["code"]["m"], cfg["code"]["partner"])
    return code, paired, cycle_schedule(cfg)


def _run_memory_cycle(cfg, w: _Writer) -> dict:
    flavor, params = _flavor_params(cfg)
    code, paired, ramps = _cycle_inputs(cfg)
    res = run_memory_cycle(flavor, params, code, paired, ramps, _decay(cfg),
                           dt=cfg["integrator"]["dt"], snapshots=cfg["integrator"]["snapshots"])
    cols = _memory_series(res)
    _write_trajectory(w, "cycle", cols, title="write / hold / read")
    payload = res.to_dict()
    payload["series"] = {k: v for k, v in cols.items()}
    w.json("memory_cycle.json", payload)
    w.figure(plotting.plot_density_matrix, "rho_photon.png", res.rho_photon_cycle, title="photon, after read")
    return {"status": "ok", "F_write": res.f_write, "F_cycle": res.f_cycle,
            "F_return": res.f_return, "max_eta": res.max_eta,
            "norm_lost": res.norm_lost}


def _finite_N_task(args):
    flavor, N, raw, strict = args
    cfg = parse_config(yaml.safe_dump(raw), strict=strict)
    code, paired, ramps = _cycle_inputs(cfg)
    params = ModelParams(1.0, 0.0, N) if flavor == "dicke" else ModelParams(1.0)
    res = run_memory_cycle(flavor, params, code, paired, ramps, _decay(cfg),
                           dt=cfg["integrator"]["dt"], snapshots=cfg["integrator"]["snapshots"])
    return N, res.f_cycle, res.f_write, _memory_series(res)


def _run_finite_N(cfg, w: _Writer, threads: int = 1) -> dict:
    Ns = list(cfg["sweep"]["Ns"])
    tasks = [("bosonic", None, cfg.raw, True)] + [("dicke", N, cfg.raw, True) for N in Ns]
    results = _map(_finite_N_task, tasks, threads)
    _, f_boson, fw_boson, _ = results[0]
    rows = []
    for N, f_cycle, f_write, cols in results[1:]:
        _write_trajectory(w, f"N{N:04d}", cols, title=f"N = {N}")
        rows.append({"N": N, "F_cycle": f_cycle, "F_write": f_write, "deviation": abs(f_cycle - f_boson)})
    dev = np.array([r["deviation"] for r in rows])
    slope = None
    if len(rows) >= 2 and np.all(dev > 0):
        slope = float(np.polyfit(np.log(Ns), np.log(dev), 1)[0])
    w.json("finite_N_summary.json", {"F_cycle_boson": f_boson, "F_write_boson": fw_boson,
                                     "rows": rows, "loglog_slope": slope})
    w.figure(plotting.plot_finite_N, "finite_N.png", Ns, dev)
    return {"status": "ok", "F_cycle_boson": f_boson, "max_deviation": float(dev.max()),
            "loglog_slope": slope}


RUNNERS = {
    "commutators": _run_commutators,
    "spectrum": _run_spectrum,
    "connection": _run_connection,
    "passage": _run_passage,
    "memory-cycle": _run_memory_cycle,
    "finite-N-sweep": _run_finite_N,
}

HEADLINE = {
    "commutators": "max_residual",
    "spectrum": "max_dark_annihilation",
    "connection": "max_dark_dark",
    "passage": "P_dark_final",
    "memory-cycle": "F_cycle",
    "finite-N-sweep": "max_deviation",
}


def _map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_experiment(cfg: ExperimentConfig, out_dir, threads: int = 1) -> RunManifest:
    """Run one experiment and write its outputs plus ``manifest.json``."""
    t0 = time.perf_counter()
    w = _Writer(Path(out_dir), bool(cfg["output"]["figures"]))
    w.json("config.json", cfg.to_dict())
    log.info("running %s into %s", cfg.kind, out_dir)
    fn = RUNNERS[cfg.kind]
    try:
        metrics = fn(cfg, w, threads) if cfg.kind == "finite-N-sweep" else fn(cfg, w)
    except (ConfigError, ExperimentError):
        raise
    except Exception as exc:  # surface with the experiment stage attached
        raise ExperimentError(cfg.kind, exc) from exc
    manifest = RunManifest(cfg.config_hash(), __version__, cfg.kind)
    manifest.runs.append({"kind": cfg.kind, **_jsonable(metrics)})
    manifest.files = list(w.files)
    manifest.wall_time = time.perf_counter() - t0
    manifest.write(w.out)
    return manifest


def _sweep_task(args):
    raw, strict, out_dir = args
    cfg = parse_config(yaml.safe_dump(raw), strict=strict)
    m = run_experiment(cfg, out_dir)
    return m.to_dict()


def sweep(raw_or_cfg, axis: str, values: Sequence[float], out_dir, threads: int = 1,
          strict: bool = True) -> RunManifest:
    """One sub-run per value of the dotted numeric config field ``axis``."""
    raw = raw_or_cfg.raw if isinstance(raw_or_cfg, ExperimentConfig) else dict(raw_or_cfg)
    if not values:
        raise ConfigError([f"sweep over '{axis}': empty value list"])
    base = parse_config(yaml.safe_dump(raw), strict=strict)
    try:
        current = get_path(base, axis)
    except KeyError:
        raise ConfigError([f"sweep axis '{axis}' is not a config field"]) from None
    numeric = isinstance(current, (int, float)) and not isinstance(current, bool)
    if not numeric and current is not None:
        raise ConfigError([f"sweep axis '{axis}' is not numeric (value {current!r})"])
    bad = [v for v in values if isinstance(v, bool) or not isinstance(v, (int, float))]
    if bad:
        raise ConfigError([f"sweep values must be numbers, got {bad!r}"])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    tasks, subdirs = [], []
    for v in values:
        sub_raw = set_path(raw, axis, v)
        parse_config(yaml.safe_dump(sub_raw), strict=strict)  # fail fast before spawning work
        sub = out / f"{axis}={v:g}"
        tasks.append((sub_raw, strict, str(sub)))
        subdirs.append(sub)
    results = _map(_sweep_task, tasks, threads)
    manifest = RunManifest(base.config_hash(), __version__, base.kind)
    metric = HEADLINE[base.kind]
    summary = []
    for v, sub, res in zip(values, subdirs, results):
        for run in res["runs"]:
            manifest.runs.append({**run, "axis_value": v, "dir": sub.name})
        manifest.files += [f"{sub.name}/{f}" for f in res["files"]] + [f"{sub.name}/manifest.json"]
        summary.append({"axis": axis, "value": v, metric: res["runs"][0].get(metric)})
    manifest.summary = summary
    with open(out / "summary.csv", "w") as fh:
        fh.write(f"{axis},{metric}\n")
        for row in summary:
            val = row[metric]
            fh.write(f"{row['value']!r},{'' if val is None else format(float(val), '.17g')}\n")
    manifest.files.append("summary.csv")
    if base["output"]["figures"]:
        plotting.plot_sweep([r["value"] for r in summary],
                            [np.nan if r[metric] is None else r[metric] for r in summary],
                            out / "summary.png", axis, metric)
        manifest.files.append("summary.png")
    manifest.wall_time = time.perf_counter() - t0
    manifest.write(out)
    return manifest
