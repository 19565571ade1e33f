"""Command-line runner: ``rotqubit {run,sweep,presets,validate}``.

Exit codes: 0 success, 2 config error, 3 simulation invariant violation,
4 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from itertools import product
from pathlib import Path

import numpy as np

from . import __version__
from . import constants as const
from .config import (
    ConfigError, ScenarioConfig, build, list_presets, load, preset_dir, preset_path,
    published_schema, resolve, set_path,
)
from .dynamics import (
    E0sq_for_rabi, SimulationError, TruncationError, fit_rabi_frequency, light_shift,
    rabi_frequency, resonant_beat, simulate_drive,
)
from .fields import CO_PROPAGATING, E0sq_to_intensity, SynthesizedDrive, intensity_to_E0sq

EXIT_OK, EXIT_CONFIG, EXIT_SIM, EXIT_IO = 0, 2, 3, 4
SERIES_COLUMNS = ("time_s", "population_<state>", "coherence", "photon_count", "round")
BOUNDARY_LIMIT = 1e-8
PHONON_LIMIT = 1e-6


@dataclass
class ResultRecord:
    scenario: dict
    results: dict
    series: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def payload(self, timestamp=True):
        prov = dict(self.provenance)
        if not timestamp:
            prov.pop("timestamp", None)
        return {"schema_version": self.scenario.get("schema_version", 1),
                "scenario": self.scenario, "results": self.results,
                "series": self.series, "provenance": prov}


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


# --------------------------------------------------------------------------- scenarios


def _label(state):
    return f"population_{state.label}"


def run_rabi(sc: ScenarioConfig, threads=1):
    m, d, s = sc.objects["molecule"], sc.raw["drive"], sc.raw["sim"]
    lower, upper = sc.objects["lower"], sc.objects["upper"]
    kind = d["kind"]
    if d["intensity_w_cm2"] is not None:
        E0_sq = intensity_to_E0sq(d["intensity_w_cm2"])
    else:
        E0_sq = E0sq_for_rabi(m, d["rabi_over_omega0"] * m.omega0, kind, lower, upper)
    rabi = rabi_frequency(m, E0_sq, kind, lower, upper)
    compensate = d["compensate_light_shift"] and s["light_shift"]
    beat = resonant_beat(m, kind, E0_sq, lower, upper, compensate=compensate)
    if d["pulse_area"] is not None:
        duration = d["pulse_area"] / rabi
    else:
        duration = (d["periods"] or 2.0) * const.TWO_PI / rabi
    drive = SynthesizedDrive(kind, E0_sq, beat, d["phase"], 0.0, CO_PROPAGATING, 0.0, duration)
    cutoff = None if s["rwa_cutoff_hz"] is None else const.TWO_PI * s["rwa_cutoff_hz"]
    results = {
        "closed_form_rabi_hz": rabi / const.TWO_PI,
        "rabi_over_omega0": rabi / m.omega0,
        "intensity_w_cm2": E0sq_to_intensity(E0_sq),
        "E0_sq_V2_per_m2": E0_sq,
        "qubit_gap_hz": m.omega0 / const.TWO_PI,
        "light_shift_hz": light_shift(m, kind, E0_sq, lower, upper) / const.TWO_PI,
        "beat_hz": beat / const.TWO_PI,
        "duration_s": duration,
        "runs": [],
    }
    series = {}
    for k, init in enumerate(sc.objects["initial"]):
        tr = simulate_drive(m, drive, duration, s["samples"], init, s["J_max"], s["frame"],
                            s["tol"], s["light_shift"], cutoff)
        p_init = tr.population(init)
        run = {
            "initial": [init.J, init.M],
            "final_lower": float(tr.population(lower)[-1]),
            "final_upper": float(tr.population(upper)[-1]),
            "max_upper": float(tr.population(upper).max()),
            "max_change_initial": float(np.max(np.abs(p_init - p_init[0]))),
            "leakage_other_M": float(tr.leakage_outside(init.M).max()),
            "boundary_max": float(tr.boundary.max()),
            "norm_drift": tr.norm_drift,
        }
        if run["boundary_max"] > BOUNDARY_LIMIT:
            raise TruncationError(f"J_max shell population {run['boundary_max']:.2e} exceeds "
                                  f"{BOUNDARY_LIMIT:g}")
        if k == 0:
            if d["pulse_area"] is None and init == lower:
                W, err = fit_rabi_frequency(tr.times, tr.population(upper), guess=rabi)
                results["fitted_rabi_hz"] = W / const.TWO_PI
                results["fitted_rabi_stderr_hz"] = err / const.TWO_PI
                results["fit_ratio"] = W / rabi
            series = {"time_s": tr.times, _label(lower): tr.population(lower),
                      _label(upper): tr.population(upper)}
        results["runs"].append(run)
    return results, series


def run_gate_cz(sc, threads=1):
    from .gates import run_cnot

    g, s = sc.raw["gate"], sc.raw["sim"]
    cutoff = None if g["rwa_cutoff_hz"] is None else const.TWO_PI * g["rwa_cutoff_hz"]
    report, seq = run_cnot(sc.objects["molecule"], sc.objects["mode"],
                           const.TWO_PI * g["sideband_rabi_hz"], const.TWO_PI * g["carrier_rabi_hz"],
                           s["J_max"], cutoff, g["light_shift"], s["tol"])
    if report.boundary_population > BOUNDARY_LIMIT:
        raise TruncationError("J_max shell populated during the CNOT")
    out = report.as_dict()
    out["realized_abs"] = np.abs(report.realized)
    out["realized_phase"] = np.angle(report.realized)
    out["duration_s"] = seq.end
    out["pulses"] = [{"label": p.label, "start_s": p.start, "duration_s": p.duration}
                     for p in seq.pulses]
    return out, {}


def run_gate_sm(sc, threads=1):
    from .gates import run_sorensen_molmer

    g, s, mode = sc.raw["gate"], sc.raw["sim"], sc.objects["mode"]
    cutoff = None if g["rwa_cutoff_hz"] is None else const.TWO_PI * g["rwa_cutoff_hz"]
    rows, per_n = run_sorensen_molmer(sc.objects["molecule"], mode, const.TWO_PI * g["delta_hz"],
                                      g["n_bars"], s["J_max"], cutoff, g["light_shift"], s["tol"],
                                      g["loops"])
    for r in rows:
        if r.truncation > PHONON_LIMIT or r.tail_mass > PHONON_LIMIT:
            raise TruncationError(f"phonon truncation at n_max={mode.n_max} too small for "
                                  f"n_bar={r.n_bar} (top level {r.truncation:.2e}, "
                                  f"tail {r.tail_mass:.2e})")
    fids = [r.fidelity for r in rows]
    return {
        "rows": [{"n_bar": r.n_bar, "fidelity": r.fidelity, "top_level_population": r.truncation,
                  "thermal_tail_mass": r.tail_mass} for r in rows],
        "fidelity_spread": max(fids) - min(fids),
        "fock_fidelity": per_n,
        "duration_s": g["loops"] / g["delta_hz"],
    }, {}


def run_readout(sc, threads=1):
    from dataclasses import replace

    from .angular import UP
    from .dynamics import JointState
    from .readout import assignment_fidelity, readout_basis, readout_protocol

    atom, cfg = sc.objects["atom"], sc.objects["config"]
    m, trials, seed = sc.objects["molecule"], sc.raw["trials"], sc.raw["seed"]
    row = assignment_fidelity(atom, cfg, trials, seed, threads, m)
    p_bd, p_db = atom.misclassification()
    results = dict(row.as_dict())
    results["bright_misread"] = p_bd
    results["dark_misread"] = p_db
    curve = []
    for reps in sc.raw["readout"]["repetition_curve"]:
        curve.append(assignment_fidelity(atom, replace(cfg, repetitions=reps), trials, seed,
                                         threads, m).as_dict())
    results["repetition_curve"] = curve
    basis = readout_basis(m, atom, cfg.read_state)
    shot = JointState.product(basis, {"rotor": UP, "atom": "down", "ph": 0})
    outcome, post, counts = readout_protocol(shot, atom, cfg, seed, molecule=m)
    results["example_shot"] = {"input": "up", "outcome": outcome, "post_norm": post.norm}
    series = {"round": np.arange(1, cfg.repetitions + 1), "photon_count": counts}
    return results, series


def run_decoherence(sc, threads=1):
    from .angular import DOWN, UP
    from .decoherence import (
        NoiseProcess, compare_coherence, manifold_moment_magnitude, ramsey_decay, rotational_qubit,
    )

    o, trials, seed = sc.objects, sc.raw["trials"], sc.raw["seed"]
    m = o["molecule"]
    cmp_q = compare_coherence(o["a"], o["b"], o["noise"], trials, seed, threads=threads)
    results = {"quasi_static": cmp_q.as_dict()}
    if sc.raw["narrowing_tau_c_s"] is not None:
        fast = NoiseProcess(o["noise"].sigma_B, sc.raw["narrowing_tau_c_s"])
        results["narrowing"] = compare_coherence(o["a"], o["b"], fast, trials, seed,
                                                 threads=threads).as_dict()
    m0 = rotational_qubit(m.g_r, DOWN, UP)
    window = sc.raw["m0_window_factor"] * cmp_q.a.T2
    r0 = ramsey_decay(m0, o["noise"], np.linspace(0.0, window, 50), trials, seed + 7, threads)
    results["m0_qubit"] = {"window_s": window, "min_coherence": float(r0.coherence.min()),
                           "note": r0.message}
    results["up_manifold_moment_muN"] = manifold_moment_magnitude(UP.J, m.g_r)
    results["sensitivity_ratio"] = cmp_q.sensitivity_ratio
    series = {"time_s": cmp_q.a.times, "coherence": cmp_q.a.coherence}
    return results, series


RUNNERS = {"rabi": run_rabi, "gate-cz": run_gate_cz, "gate-sm": run_gate_sm,
           "readout": run_readout, "decoherence": run_decoherence}


def execute(cfg, threads=1):
    """Run a resolved (non-sweep) config and return a ResultRecord."""
    sc = build(cfg)
    results, series = RUNNERS[sc.kind](sc, threads)
    prov = {"tool": "rotqubit", "version": __version__, "seed": cfg.get("seed", 0),
            "timestamp": datetime.now(timezone.utc).isoformat()}
    return ResultRecord(cfg, _clean(results), _clean(series), prov)


# --------------------------------------------------------------------------- output


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(payload):
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def series_csv(series, name=""):
    cols = list(series)
    buf = io.StringIO()
    buf.write(f"# rotqubit series v1 {name}; columns: {', '.join(SERIES_COLUMNS)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    n = len(series[cols[0]]) if cols else 0
    for i in range(n):
        w.writerow([repr(series[c][i]) if isinstance(series[c][i], float) else series[c][i]
                    for c in cols])
    return buf.getvalue()


def table_csv(rows, name=""):
    cols = sorted({k for r in rows for k in r})
    buf = io.StringIO()
    buf.write(f"# rotqubit sweep table v1 {name}\n")
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def write_record(record, out_dir, stem, fmt):
    out_dir = Path(out_dir)
    payload = record.payload()
    if fmt == "csv":
        if record.series:
            atomic_write(out_dir / f"{stem}.csv", series_csv(record.series, stem))
        payload = dict(payload, series={})
    atomic_write(out_dir / f"{stem}.json", dumps(payload))


def _scalars(results, prefix=""):
    out = {}
    for k, v in results.items():
        key = f"{prefix}{k}"
        if isinstance(v, bool) or v is None:
            continue
        if isinstance(v, (int, float)):
            out[key] = v
        elif isinstance(v, dict):
            out.update(_scalars(v, key + "."))
    return out


def run_sweep(cfg, out_dir, stem, fmt="json", threads=1):
    """Grid over ``axes``; each point is stored with a completion marker and skipped if present."""
    axes = cfg["axes"]
    names = list(axes)
    grid = list(product(*(axes[n] for n in names)))
    point_dir = Path(out_dir) / f"{stem}.points"
    point_dir.mkdir(parents=True, exist_ok=True)

    def point(i):
        marker = point_dir / f"{i:05d}.done"
        path = point_dir / f"{i:05d}.json"
        if marker.exists() and path.exists():
            return json.loads(path.read_text())
        doc = cfg["base"]
        for n, v in zip(names, grid[i]):
            doc = set_path(doc, n, v)
        rec = execute(resolve(doc), 1)
        payload = rec.payload(timestamp=False)
        atomic_write(path, dumps(payload))
        atomic_write(marker, "")
        return payload

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            points = list(ex.map(point, range(len(grid))))
    else:
        points = [point(i) for i in range(len(grid))]
    rows = []
    for values, p in zip(grid, points):
        row = dict(zip(names, values))
        row.update(_scalars(p["results"]))
        rows.append(row)
    prov = {"tool": "rotqubit", "version": __version__, "seed": cfg.get("seed", 0),
            "timestamp": datetime.now(timezone.utc).isoformat()}
    record = ResultRecord(cfg, {"table": rows, "points": len(grid)}, {}, prov)
    if fmt == "csv":
        atomic_write(Path(out_dir) / f"{stem}.csv", table_csv(rows, stem))
    atomic_write(Path(out_dir) / f"{stem}.json", dumps(_clean(record.payload())))
    return rows


# --------------------------------------------------------------------------- entry point


def _resolve_source(source):
    p = Path(source)
    if p.is_file():
        return p, p.stem
    if p.suffix == "" and os.sep not in source:
        return preset_path(source), source
    raise FileNotFoundError(f"config file not found: {source}")


def _apply_seed(cfg, seed):
    if seed is None:
        return cfg
    cfg = copy.deepcopy(cfg)
    cfg["seed"] = seed
    if cfg["scenario"] == "sweep":
        cfg["base"]["seed"] = seed
    return cfg


def build_parser():
    p = argparse.ArgumentParser(prog="rotqubit", description="Rotational-state molecular-ion qubit simulator.")
    p.add_argument("--version", action="version", version=f"rotqubit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="config file path or preset name")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--out", default="results", help="output directory (default: results)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--threads", type=int, default=1, help="worker threads")

    common(sub.add_parser("run", help="run one scenario"))
    common(sub.add_parser("sweep", help="run a parameter grid (resumable)"))
    sp = sub.add_parser("presets", help="list shipped presets")
    sp.add_argument("--show", metavar="NAME", help="print one preset")
    sp = sub.add_parser("validate", help="validate a config without running it")
    sp.add_argument("config", nargs="?")
    sp.add_argument("--print-schema", action="store_true", help="print the published JSON schema")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            if args.show:
                sys.stdout.write(preset_path(args.show).read_text())
            else:
                print(f"# presets in {preset_dir()}")
                for name in list_presets():
                    print(name)
            return EXIT_OK
        if args.command == "validate":
            if args.print_schema:
                print(json.dumps(published_schema(), indent=2))
                return EXIT_OK
            if not args.config:
                raise ConfigError("validate needs a config path or preset name")
            path, _ = _resolve_source(args.config)
            load(path)
            print(f"{path}: ok")
            return EXIT_OK
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        path, stem = _resolve_source(args.config)
        cfg = _apply_seed(load(path), args.seed)
        if args.seed is not None:
            cfg = resolve(cfg)
        if args.command == "sweep" or cfg["scenario"] == "sweep":
            if cfg["scenario"] != "sweep":
                raise ConfigError("sweep needs a config with scenario 'sweep'")
            rows = run_sweep(cfg, args.out, stem, args.format, args.threads)
            print(f"{stem}: {len(rows)} points -> {Path(args.out) / (stem + '.json')}")
        else:
            record = execute(cfg, args.threads)
            write_record(record, args.out, stem, args.format)
            print(f"{stem}: ok -> {Path(args.out) / (stem + '.json')}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIM
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
