"""Command-line experiment runner.

``mlab run <config>`` evolves every leg of a config, writes per-leg records,
spectra, Γ series and snapshots, runs the optional measurement ensemble and
finishes with ``manifest.json`` (sha256 of every artifact). ``--stop-at T``
writes a checkpoint at an observation time; ``--resume`` continues from it
and produces the same bytes as an uninterrupted run.

Exit codes: 0 success, 2 invalid input, 3 numerical failure (partial outputs
and ``diagnostics.json`` are kept).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, weyl
from .config import ExperimentConfig, load_config
from .errors import (
    ConfigurationError,
    DomainError,
    IntegrityError,
    MisuseError,
    MlabError,
    NumericalBlowupError,
    ResolutionError,
    SequencingError,
    StepSizeError,
    TruncationError,
)
from .evolve import EvolutionConfig, evolve_to, fft_workers
from .observables import TrajectoryRecord, divergence, saturation_check, standard_observers
from .phasespace import (
    PhaseSpaceState,
    export_csv,
    gaussian_state,
    make_grid,
    read_snapshot,
    refine_x,
    write_snapshot,
)
from .potentials import from_params
from .sme import (
    Lattice,
    MeasurementRecord,
    SmeConfig,
    ensemble_average,
    gaussian_wavefunction,
    localization_ratio,
    run_trajectory,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
INPUT_ERRORS = (ConfigurationError, MisuseError, DomainError, SequencingError, ResolutionError,
                FileNotFoundError, IsADirectoryError)
NUMERIC_ERRORS = (NumericalBlowupError, TruncationError, StepSizeError, IntegrityError,
                  FloatingPointError)
CHECKPOINT_VERSION = 1


def _tag(t: float) -> str:
    return f"t{t:g}"


def _on_lattice(t: float, step: float) -> bool:
    n = t / step
    return abs(n - round(n)) <= 1e-9 * max(1.0, abs(n))


# -- building blocks -----------------------------------------------------------

def _grid(cfg: ExperimentConfig):
    g = cfg.grid
    return make_grid(g["nx"], g["np"], g["x_min"], g["x_max"], g["p_min"], g["p_max"], g["boundary"])


def _potential(cfg: ExperimentConfig):
    params = dict(cfg.potential)
    return from_params(params.pop("type"), **params)


def _initial_state(cfg: ExperimentConfig, grid, kind: str) -> PhaseSpaceState:
    i = cfg.init
    return gaussian_state(grid, i["x0"], i["p0"], i["dx"], i["dp"], kind=kind, hbar=cfg.hbar,
                          check_min_uncertainty=i["min_uncertainty"])


def _spectrum_report(cfg: ExperimentConfig, state: PhaseSpaceState):
    fine = refine_x(state, cfg.weyl_refine) if cfg.weyl_refine > 1 else state
    return weyl.spectrum(weyl.to_density_matrix(fine))


def _report_summary(rep) -> dict:
    return {"t": rep.t, "nu": rep.negative_mass, "min_eigenvalue": rep.min_eigenvalue,
            "purity": rep.purity, "trace": rep.trace, "source": rep.source}


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out: Path, cfg: ExperimentConfig | None = None) -> Path:
    """List every file under ``out`` (except the manifest) with its checksum."""
    path = out / "manifest.json"
    files = []
    for p in sorted(out.rglob("*")):
        if p.is_file() and p != path:
            files.append({"path": p.relative_to(out).as_posix(), "bytes": p.stat().st_size,
                          "sha256": _sha256(p)})
    doc = {"mlab_version": __version__, "config_hash": cfg.digest if cfg else None, "files": files}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def verify_manifest(out: Path) -> list[str]:
    """Paths whose checksum no longer matches the manifest."""
    doc = json.loads((out / "manifest.json").read_text())
    return [e["path"] for e in doc["files"] if _sha256(out / e["path"]) != e["sha256"]]


# -- phase-space legs ----------------------------------------------------------

def _run_leg(cfg: ExperimentConfig, leg, out: Path, stop_at: float | None, resume: bool) -> dict:
    """Evolve one leg; returns its summary, including an ``error`` entry on failure."""
    grid = _grid(cfg)
    pot = _potential(cfg)
    evo = EvolutionConfig(leg.mode, leg.D, cfg.dt, cfg.moyal, cfg.lambda_max, debug=cfg.debug)
    ckpt = out / "checkpoint"
    summary = {"leg": leg.name, "mode": leg.mode, "D": leg.D, "spectra": [], "error": None}
    record = None
    if resume:
        state, record, summary = _load_leg_checkpoint(cfg, leg, grid, ckpt)
    else:
        state = _initial_state(cfg, grid, evo.kind)
    t_end = cfg.t_final if stop_at is None else stop_at
    marks = sorted({t for t in cfg.spectrum_times + cfg.snapshot_times if state.t < t <= t_end}
                   | {t_end})
    observers = standard_observers(cfg.observables)
    meta = {"leg": leg.name, "config_hash": cfg.digest, "seed": cfg.seed}

    def at_mark(s):
        if any(math.isclose(s.t, t, abs_tol=1e-9) for t in cfg.spectrum_times):
            rep = _spectrum_report(cfg, s)
            weyl.export_spectrum_csv(out / f"{leg.name}_spectrum_{_tag(s.t)}.csv", rep)
            summary["spectra"].append(_report_summary(rep))
        if any(math.isclose(s.t, t, abs_tol=1e-9) for t in cfg.snapshot_times):
            write_snapshot(out / f"{leg.name}_snapshot_{_tag(s.t)}.mlab", s)
            if cfg.raw.get("diagnostics.snapshot_csv") is True:
                export_csv(out / f"{leg.name}_snapshot_{_tag(s.t)}.csv", s)

    try:
        if not resume:
            at_mark(state)
        for t in marks:
            rec, state = evolve_to(state, pot, evo, t, observers, cfg.cadence, observe_at=marks)
            record = rec if record is None else record.concatenate(rec)
            at_mark(state)
    except NUMERIC_ERRORS as exc:
        partial = getattr(exc, "partial", None)
        if partial is not None and len(partial):
            record = partial if record is None else record.concatenate(partial)
        if record is not None:
            record.metadata.update(meta)
            record.to_csv(out / f"{leg.name}_record.partial.csv")
        last = float(record.times[-1]) if record is not None and len(record) else state.t
        summary["error"] = {"type": type(exc).__name__, "message": str(exc),
                            "last_good_t": last}
        return summary

    record.metadata.update(meta)
    if stop_at is not None and not math.isclose(stop_at, cfg.t_final):
        ckpt.mkdir(exist_ok=True)
        write_snapshot(ckpt / f"{leg.name}.mlab", state)
        record.to_csv(ckpt / f"{leg.name}_record.csv")
        side = {"version": CHECKPOINT_VERSION, "config_hash": cfg.digest, "t": state.t,
                "step": round(state.t / cfg.dt), "summary": summary}
        (ckpt / f"{leg.name}.json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")
        summary["stopped_at"] = state.t
        return summary

    record.to_csv(out / f"{leg.name}_record.csv")
    if "gamma" in record.series:
        weyl.export_gamma_csv(out / f"{leg.name}_gamma.csv", record.times, record["gamma"])
    summary["final"] = {name: float(v[-1]) for name, v in record.series.items()}
    return summary


def _load_leg_checkpoint(cfg, leg, grid, ckpt: Path):
    side_path = ckpt / f"{leg.name}.json"
    if not side_path.is_file():
        raise ConfigurationError(f"no checkpoint for leg {leg.name!r} in {ckpt}")
    side = json.loads(side_path.read_text())
    if side.get("version") != CHECKPOINT_VERSION:
        raise ConfigurationError(f"{side_path}: checkpoint version {side.get('version')} unsupported")
    if side.get("config_hash") != cfg.digest:
        raise ConfigurationError(f"{side_path}: written by a different config")
    state = read_snapshot(ckpt / f"{leg.name}.mlab")
    if state.grid != grid:
        raise ConfigurationError(f"{ckpt / (leg.name + '.mlab')}: grid does not match the config")
    want = "wigner" if leg.mode.startswith("quantum") else "classical"
    if state.kind != want or state.hbar != cfg.hbar:
        raise ConfigurationError(f"{ckpt / (leg.name + '.mlab')}: state kind or hbar does not match")
    record = TrajectoryRecord.from_csv(ckpt / f"{leg.name}_record.csv")
    return state, record, side["summary"]


# -- measurement ensemble ------------------------------------------------------

def _lattice(cfg: ExperimentConfig, grid) -> Lattice:
    s = cfg.sme
    if s["lattice_n"]:
        n = s["lattice_n"]
        return Lattice(n, (s["lattice_x_max"] - s["lattice_x_min"]) / n, s["lattice_x_min"],
                       grid.periodic)
    return Lattice.from_grid(grid, cfg.hbar)


def _sme_config(cfg: ExperimentConfig) -> SmeConfig:
    s = cfg.sme
    return SmeConfig(s["k"], s["eta"], s["dt"], max(1, s["n_traj"]), cfg.seed, s["scheme"])


def _sme_initial(cfg: ExperimentConfig, lattice: Lattice):
    i = cfg.init
    psi = gaussian_wavefunction(lattice, i["x0"], i["p0"], i["dx"], cfg.hbar)
    if cfg.sme["representation"] == "density_matrix" or cfg.sme["eta"] < 1:
        return np.outer(psi, psi.conj())
    return psi


def _rng_state_to_json(state):
    def conv(v):
        if isinstance(v, dict):
            return {k: conv(x) for k, x in v.items()}
        if isinstance(v, np.ndarray):
            return {"__array__": [int(x) for x in v], "dtype": str(v.dtype)}
        if isinstance(v, np.integer):
            return int(v)
        return v
    return conv(state)


def _rng_state_from_json(doc):
    def conv(v):
        if isinstance(v, dict) and "__array__" in v:
            return np.array(v["__array__"], dtype=v["dtype"])
        if isinstance(v, dict):
            return {k: conv(x) for k, x in v.items()}
        return v
    return conv(doc)


def _sme_worker(args):
    cfg, idx, t_end, ckpt, resume = args
    grid = _grid(cfg)
    lattice = _lattice(cfg, grid)
    pot = _potential(cfg)
    sc = _sme_config(cfg)
    t0, rng, prev_meas, prev_rec = 0.0, None, None, None
    if resume:
        data = np.load(ckpt / f"sme_{idx:04d}.npz")
        side = json.loads((ckpt / f"sme_{idx:04d}.json").read_text())
        if side.get("config_hash") != cfg.digest or side.get("version") != CHECKPOINT_VERSION:
            raise ConfigurationError(f"SME checkpoint {idx} does not match this config")
        state = data["state"]
        t0 = float(side["t"])
        rng = np.random.Generator(np.random.Philox())
        rng.bit_generator.state = _rng_state_from_json(side["rng_state"])
        prev_meas = MeasurementRecord(data["times"], data["record"], data["dW"], sc.seed, idx)
        prev_rec = TrajectoryRecord.from_csv(ckpt / f"sme_{idx:04d}_record.csv")
    else:
        state = _sme_initial(cfg, lattice)
    state, meas, rec = run_trajectory(state, lattice, pot, sc, t_end, cfg.hbar, idx, t0,
                                      cfg.sme["log_every"], rng)
    if prev_meas is not None:
        meas = MeasurementRecord(np.concatenate([prev_meas.times, meas.times]),
                                 np.concatenate([prev_meas.record, meas.record]),
                                 np.concatenate([prev_meas.dW, meas.dW]),
                                 sc.seed, idx, meas.informative, meas.rng_state)
        rec = prev_rec.concatenate(rec)
    return idx, state, meas, rec


def _run_sme(cfg: ExperimentConfig, out: Path, stop_at: float | None, resume: bool) -> dict:
    n_traj = cfg.sme["n_traj"]
    t_end = cfg.t_final if stop_at is None else stop_at
    ckpt = out / "checkpoint"
    jobs = [(cfg, i, t_end, ckpt, resume) for i in range(n_traj)]
    workers = min(fft_workers(), n_traj)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sme_worker, jobs))
    else:
        results = [_sme_worker(job) for job in jobs]

    stopping = stop_at is not None and not math.isclose(stop_at, cfg.t_final)
    records = []
    for idx, state, meas, rec in results:
        rec.metadata["config_hash"] = cfg.digest
        records.append(rec)
        if stopping:
            ckpt.mkdir(exist_ok=True)
            np.savez(ckpt / f"sme_{idx:04d}.npz", state=state, times=meas.times,
                     record=meas.record, dW=meas.dW)
            rec.to_csv(ckpt / f"sme_{idx:04d}_record.csv")
            side = {"version": CHECKPOINT_VERSION, "config_hash": cfg.digest, "t": t_end,
                    "rng_state": _rng_state_to_json(meas.rng_state)}
            (ckpt / f"sme_{idx:04d}.json").write_text(json.dumps(side, sort_keys=True) + "\n")
            continue
        _write_measurement(out / f"sme_meas_{idx:04d}.csv", meas, rec.metadata)
        _with_record_column(rec, meas).to_csv(out / f"sme_traj_{idx:04d}.csv")
    if stopping:
        return {"n_traj": n_traj, "stopped_at": t_end}
    avg = ensemble_average(records)
    avg.metadata.update(config_hash=cfg.digest, seeds=[cfg.seed, list(range(n_traj))])
    avg.to_csv(out / "sme_ensemble.csv")
    return {"n_traj": n_traj, "final": {name: float(v[-1]) for name, v in avg.series.items()}}


def _with_record_column(rec: TrajectoryRecord, meas: MeasurementRecord) -> TrajectoryRecord:
    """Add the mean measurement outcome over each logging interval (NaN at the start)."""
    col = np.full(len(rec), np.nan)
    edges = np.searchsorted(meas.times, rec.times, side="right")
    for i in range(1, len(rec)):
        col[i] = meas.record[edges[i - 1]:edges[i]].mean()
    return TrajectoryRecord(rec.times, {**rec.series, "record": col}, rec.metadata)


def _write_measurement(path: Path, meas: MeasurementRecord, meta: dict):
    with open(path, "w") as fh:
        for key in sorted(meta):
            fh.write(f"# {key} = {json.dumps(meta[key], sort_keys=True)}\n")
        fh.write("t,record,dW\n")
        for row in zip(meas.times, meas.record, meas.dW):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


# -- commands ------------------------------------------------------------------

def run_experiment(cfg: ExperimentConfig, out: Path, stop_at: float | None = None,
                   resume: bool = False) -> int:
    """Run every leg (and the ensemble) of ``cfg`` into ``out``; returns the exit code."""
    if stop_at is not None:
        ok = (0 < stop_at <= cfg.t_final and _on_lattice(stop_at, cfg.dt)
              and ((cfg.cadence and _on_lattice(stop_at, cfg.cadence))
                   or any(math.isclose(stop_at, t) for t in cfg.spectrum_times + cfg.snapshot_times)
                   or math.isclose(stop_at, cfg.t_final)))
        if not ok:
            raise ConfigurationError(f"--stop-at {stop_at} must be an observation time of the run")
        if cfg.sme and cfg.sme["n_traj"] and not (
                cfg.sme["log_every"] and _on_lattice(stop_at, cfg.sme["log_every"])):
            raise ConfigurationError(f"--stop-at {stop_at} must be a multiple of sme.log_every")
    out.mkdir(parents=True, exist_ok=True)
    if resume and not (out / "checkpoint").is_dir():
        raise ConfigurationError(f"nothing to resume in {out}")
    (out / "config.cfg").write_text(cfg.text)

    workers = min(fft_workers(), len(cfg.legs))
    jobs = [(cfg, leg, out, stop_at, resume) for leg in cfg.legs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            legs = list(pool.map(_leg_job, jobs))
    else:
        legs = [_leg_job(job) for job in jobs]

    summary = {"experiment": cfg.name, "config_hash": cfg.digest, "seed": cfg.seed,
               "legs": {s["leg"]: s for s in legs}}
    failed = [s for s in legs if s["error"]]
    if not failed and cfg.sme and cfg.sme["n_traj"]:
        try:
            summary["sme"] = _run_sme(cfg, out, stop_at, resume)
        except NUMERIC_ERRORS as exc:
            failed.append({"leg": "sme", "error": {"type": type(exc).__name__, "message": str(exc)}})
    finished = stop_at is None or math.isclose(stop_at, cfg.t_final)
    if not failed and finished:
        for s in legs:
            if s["mode"].startswith("classical") and s["spectra"]:
                c = weyl.classify([_SpectrumSummary(sp) for sp in s["spectra"]])
                s["classification"] = {"verdict": c.verdict, "nu_max": c.nu_max,
                                       "thresholds": list(c.thresholds)}
    if resume and not failed and finished:
        for p in sorted((out / "checkpoint").iterdir()):
            p.unlink()
        (out / "checkpoint").rmdir()
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if failed:
        diag = {"failures": [{"leg": s["leg"], **s["error"]} for s in failed]}
        (out / "diagnostics.json").write_text(json.dumps(diag, indent=2, sort_keys=True) + "\n")
        write_manifest(out, cfg)
        for s in failed:
            print(f"numerical failure in {s['leg']}: {s['error']['message']}", file=sys.stderr)
        return EXIT_NUMERIC
    write_manifest(out, cfg)
    for s in legs:
        line = f"{s['leg']}: {s['mode']} D={s['D']:g}"
        for sp in s["spectra"]:
            line += f" | t={sp['t']:g} nu={sp['nu']:.6g} min_eig={sp['min_eigenvalue']:.3g}"
        if "classification" in s:
            line += f" | {s['classification']['verdict']}"
        print(line)
    print(f"outputs in {out}")
    return EXIT_OK


class _SpectrumSummary:
    """Stand-in carrying the fields :func:`weyl.classify` reads."""

    def __init__(self, doc: dict):
        self.negative_mass = doc["nu"]
        self.source = doc["source"]


def _leg_job(args):
    return _run_leg(*args)


def preset_path(name: str) -> Path:
    path = resources.files("mlab") / "presets" / f"{name}.cfg"
    if not path.is_file():
        raise ConfigurationError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return Path(str(path))


def preset_names() -> list[str]:
    return sorted(p.name[:-4] for p in (resources.files("mlab") / "presets").iterdir()
                  if p.name.endswith(".cfg"))


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.output or cfg.output_dir)
    return run_experiment(cfg, out, args.stop_at, args.resume)


def _cmd_preset(args) -> int:
    if args.list or not args.name:
        print("\n".join(preset_names()))
        return EXIT_OK
    cfg = load_config(preset_path(args.name))
    out = Path(args.output or cfg.output_dir)
    return run_experiment(cfg, out, args.stop_at, args.resume)


def _cmd_spectrum(args) -> int:
    state = read_snapshot(args.snapshot)
    if args.refine > 1:
        state = refine_x(state, args.refine)
    rep = weyl.spectrum(weyl.to_density_matrix(state))
    out = Path(args.out) if args.out else Path(args.snapshot).with_suffix(".spectrum.csv")
    weyl.export_spectrum_csv(out, rep)
    print(f"t={rep.t:.17g} n={len(rep.eigenvalues)} nu={rep.negative_mass:.17g} "
          f"min_eig={rep.min_eigenvalue:.17g} purity={rep.purity:.17g} trace={rep.trace:.17g} "
          f"source={rep.source}")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_gamma(args) -> int:
    state = read_snapshot(args.snapshot)
    g = weyl.gamma(state)
    if args.out:
        weyl.export_gamma_csv(args.out, [state.t], [g])
    print(f"t={state.t:.17g} gamma={g:.17g}")
    return EXIT_OK


def _cmd_locheck(args) -> int:
    cfg = load_config(args.config)
    if not cfg.sme:
        raise ConfigurationError("sme.k: locheck needs the measurement section")
    grid = _grid(cfg)
    kind = "wigner" if any(leg.mode.startswith("quantum") for leg in cfg.legs) else "classical"
    state = _initial_state(cfg, grid, kind)
    res = localization_ratio(_potential(cfg), state, cfg.sme["k"], cfg.sme["eta"], t=args.t)
    ok = 0.1 <= res.median <= 10.0
    print(f"k={cfg.sme['k']:g} eta={cfg.sme['eta']:g} ratio median={res.median:.6g} "
          f"min={res.min:.6g} max={res.max:.6g} points={len(res.points)}")
    print(f"within [0.1, 10]: {'yes' if ok else 'no'}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    a = TrajectoryRecord.from_csv(args.record_a)
    b = TrajectoryRecord.from_csv(args.record_b)
    d = divergence(a, b, args.series, threshold=args.threshold)
    print(f"series={args.series} max_relative={d.max_relative:.6g} "
          f"final_relative={d.relative[-1]:.6g}")
    if args.threshold is not None:
        when = "never" if d.first_crossing is None else f"t={d.first_crossing:.17g}"
        print(f"first crossing of {args.threshold:g}: {when}")
    if args.saturation is not None:
        for label, rec in (("a", a), ("b", b)):
            s = saturation_check(rec, args.series, threshold=args.saturation)
            print(f"{label}: saturated={s.saturated} slope={s.slope:.6g} scale={s.scale:.6g} "
                  f"window={s.window:g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mlab", description="Phase-space quantum/classical laboratory")
    ap.add_argument("--version", action="version", version=f"mlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def run_opts(p):
        p.add_argument("--output", "-o", help="output directory (default: output.dir)")
        p.add_argument("--stop-at", type=float, help="stop and checkpoint at this observation time")
        p.add_argument("--resume", action="store_true", help="continue from the checkpoint in the output dir")

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    run_opts(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("preset", help="run a checked-in preset")
    p.add_argument("name", nargs="?")
    p.add_argument("--list", action="store_true")
    run_opts(p)
    p.set_defaults(func=_cmd_preset)

    p = sub.add_parser("spectrum", help="density-matrix spectrum of a snapshot")
    p.add_argument("snapshot")
    p.add_argument("--refine", type=int, default=1, help="x refinement factor before the transform")
    p.add_argument("--out", help="CSV path (default: <snapshot>.spectrum.csv)")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("gamma", help="negativity of a snapshot")
    p.add_argument("snapshot")
    p.add_argument("--out", help="write a t,gamma CSV")
    p.set_defaults(func=_cmd_gamma)

    p = sub.add_parser("locheck", help="trajectory-localization ratio for a config")
    p.add_argument("config")
    p.add_argument("--t", type=float, default=None, help="time at which to evaluate the force")
    p.set_defaults(func=_cmd_locheck)

    p = sub.add_parser("compare", help="quantum/classical divergence of two records")
    p.add_argument("record_a")
    p.add_argument("record_b")
    p.add_argument("--series", default="p2")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--saturation", type=float, default=None,
                   help="also report saturation with this relative slope threshold")
    p.set_defaults(func=_cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
