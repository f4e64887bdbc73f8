"""Flat ``section.key = value`` experiment configs.

Values may be numbers, arithmetic expressions over numbers and ``pi``/``e``
(``-32*pi``, ``2*pi/6.07``), booleans, comma-separated lists, or bare strings.
``#`` starts a comment. Validation collects every problem and names the keys.
"""
from __future__ import annotations

import ast
import hashlib
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError

__all__ = ["parse_config", "load_config", "ExperimentConfig", "Leg", "evaluate"]

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_NAMES = {"pi": math.pi, "e": math.e}


def evaluate(text: str) -> float:
    """Evaluate a restricted arithmetic expression."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return node.value
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {text!r}")

    return ev(ast.parse(text.strip(), mode="eval"))


def _value(raw: str):
    raw = raw.strip()
    low = raw.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if "," in raw:
        return [_value(part) for part in raw.split(",") if part.strip()]
    try:
        v = evaluate(raw)
    except (ValueError, SyntaxError, ZeroDivisionError, OverflowError, TypeError):
        return raw
    return int(v) if isinstance(v, int) else float(v)


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines into a flat dict of dotted keys."""
    out = {}
    problems = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep or not key:
            problems.append(f"line {lineno}: expected 'key = value'")
            continue
        if key in out:
            problems.append(f"line {lineno}: duplicate key {key!r}")
        out[key] = _value(raw)
    if problems:
        raise ConfigurationError("; ".join(problems))
    return out


@dataclass
class Leg:
    name: str
    mode: str
    D: float


@dataclass
class ExperimentConfig:
    """Validated experiment description (see :func:`load_config`)."""

    raw: dict
    text: str
    name: str
    potential: dict
    hbar: float
    grid: dict
    init: dict
    dt: float
    t_final: float
    moyal: str
    lambda_max: int
    legs: list
    cadence: float | None
    observables: list
    spectrum_times: list
    snapshot_times: list
    weyl_refine: int
    sme: dict | None
    output_dir: str
    seed: int
    debug: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()[:16]

    @property
    def weyl_needed(self) -> bool:
        return bool(self.spectrum_times) or bool({"nu", "min_eig"} & set(self.observables))


_KNOWN_SECTIONS = ("experiment", "potential", "grid", "init", "evolve", "legs", "diagnostics",
                   "sme", "output", "seed")


def _as_list(v):
    if v is None or v == "":
        return []
    return v if isinstance(v, list) else [v]


def load_config(source, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate a config file (path or text).

    Raises
    ------
    ConfigurationError
        Listing every invalid or missing key.
    """
    from .evolve import MODES
    from .potentials import from_params

    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source
                                     and "=" not in source):
        text = Path(source).read_text()
    else:
        text = str(source)
    raw = parse_config(text)
    if overrides:
        raw.update(overrides)
    problems = []

    def need(key, kind=float, default=None, required=True):
        if key not in raw:
            if required and default is None:
                problems.append(f"{key}: missing")
            return default
        v = raw[key]
        if kind is float:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                problems.append(f"{key}: expected a number, got {v!r}")
                return default
            return float(v)
        if kind is int:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
                problems.append(f"{key}: expected an integer, got {v!r}")
                return default
            return int(v)
        if kind is bool:
            if not isinstance(v, bool):
                problems.append(f"{key}: expected true/false, got {v!r}")
                return default
            return v
        return v

    for key in raw:
        if key.split(".", 1)[0] not in _KNOWN_SECTIONS:
            problems.append(f"{key}: unknown section")

    name = str(raw.get("experiment.name", "experiment"))
    pot = {k.split(".", 1)[1]: v for k, v in raw.items() if k.startswith("potential.")}
    ptype = pot.pop("type", None)
    if ptype is None:
        problems.append("potential.type: missing")
    else:
        try:
            from_params(ptype, **pot)
        except (ConfigurationError, TypeError) as exc:
            problems.append(f"potential.*: {exc}")
    hbar = need("init.hbar")
    if hbar is not None and not hbar > 0:
        problems.append(f"init.hbar: must be > 0, got {hbar}")

    grid = {}
    for key, kind in (("nx", int), ("np", int), ("x_min", float), ("x_max", float),
                      ("p_min", float), ("p_max", float)):
        grid[key] = need(f"grid.{key}", kind)
    grid["boundary"] = str(raw.get("grid.boundary", "box"))
    if None not in grid.values():
        from .phasespace import make_grid
        try:
            make_grid(grid["nx"], grid["np"], grid["x_min"], grid["x_max"], grid["p_min"],
                      grid["p_max"], grid["boundary"])
        except ConfigurationError as exc:
            problems.append(f"grid.*: {exc}")

    init = {key: need(f"init.{key}") for key in ("x0", "p0", "dx", "dp")}
    init["min_uncertainty"] = need("init.min_uncertainty", bool, False, required=False)
    if init["min_uncertainty"] and None not in (init["dx"], init["dp"], hbar):
        if not math.isclose(init["dx"] * init["dp"], hbar / 2, rel_tol=1e-9):
            problems.append(f"init.dx/init.dp: product {init['dx'] * init['dp']} differs from hbar/2 = {hbar / 2}")

    dt = need("evolve.dt")
    t_final = need("evolve.t_final")
    moyal = str(raw.get("evolve.moyal", "exact_kernel"))
    lambda_max = need("evolve.lambda_max", int, 9, required=False)
    debug = need("evolve.debug", bool, False, required=False)
    if dt is not None and t_final is not None:
        if not (dt > 0 and t_final > 0):
            problems.append("evolve.dt/evolve.t_final: must be positive")
        elif abs(t_final / dt - round(t_final / dt)) > 1e-9 * max(1.0, t_final / dt):
            problems.append(f"evolve.t_final: {t_final} is not a multiple of evolve.dt = {dt}")

    leg_names = sorted({k.split(".")[1] for k in raw if k.startswith("legs.") and k.count(".") == 2})
    legs = []
    if not leg_names:
        problems.append("legs.<name>.mode: at least one leg is required")
    for leg in leg_names:
        mode = raw.get(f"legs.{leg}.mode")
        D = need(f"legs.{leg}.D", float, 0.0, required=False)
        if mode not in MODES:
            problems.append(f"legs.{leg}.mode: {mode!r} not in {MODES}")
            continue
        if mode in ("classical_liouville", "quantum_liouville") and D:
            problems.append(f"legs.{leg}.D: mode {mode} requires D = 0, got {D}")
        if D is not None and D < 0:
            problems.append(f"legs.{leg}.D: must be >= 0")
        legs.append(Leg(leg, mode, D or 0.0))

    cadence = need("diagnostics.cadence", float, None, required=False)
    observables = [str(v) for v in _as_list(raw.get("diagnostics.observables", "norm"))]
    spectrum_times = [float(v) for v in _as_list(raw.get("diagnostics.spectrum_times"))]
    snapshot_times = [float(v) for v in _as_list(raw.get("diagnostics.snapshot_times"))]
    weyl_refine = need("diagnostics.weyl_refine", int, 1, required=False)
    for key, times in (("diagnostics.spectrum_times", spectrum_times),
                       ("diagnostics.snapshot_times", snapshot_times)):
        for t in times:
            if t_final is not None and not 0 <= t <= t_final:
                problems.append(f"{key}: {t} outside [0, {t_final}]")
            elif dt and abs(t / dt - round(t / dt)) > 1e-9 * max(1.0, t / dt):
                problems.append(f"{key}: {t} is not a multiple of evolve.dt")
    if cadence is not None and dt and abs(cadence / dt - round(cadence / dt)) > 1e-9 * max(1.0, cadence / dt):
        problems.append(f"diagnostics.cadence: {cadence} is not a multiple of evolve.dt")

    sme = None
    if any(k.startswith("sme.") for k in raw):
        sme = {
            "k": need("sme.k"),
            "eta": need("sme.eta", float, 1.0, required=False),
            "dt": need("sme.dt", float, dt, required=False),
            "n_traj": need("sme.n_traj", int, 0, required=False),
            "scheme": str(raw.get("sme.scheme", "kraus")),
            "lattice_n": need("sme.lattice_n", int, 0, required=False),
            "lattice_x_min": need("sme.lattice_x_min", float, None, required=False),
            "lattice_x_max": need("sme.lattice_x_max", float, None, required=False),
            "log_every": need("sme.log_every", float, None, required=False),
            "representation": str(raw.get("sme.representation", "wavefunction")),
        }
        if sme["k"] is not None and hbar is not None:
            d_sme = hbar * hbar * sme["k"]
            for leg in legs:
                if leg.D > 0 and not math.isclose(leg.D, d_sme, rel_tol=1e-9):
                    problems.append(f"legs.{leg.name}.D: {leg.D} differs from hbar^2*sme.k = {d_sme}")
        if sme["eta"] is not None and not 0 <= sme["eta"] <= 1:
            problems.append(f"sme.eta: must lie in [0, 1], got {sme['eta']}")
        if sme["lattice_n"] and (sme["lattice_x_min"] is None or sme["lattice_x_max"] is None):
            problems.append("sme.lattice_x_min/sme.lattice_x_max: required with sme.lattice_n")
        if sme["representation"] not in ("wavefunction", "density_matrix"):
            problems.append(f"sme.representation: {sme['representation']!r} not recognized")

    seed = need("seed", int, 0, required=False)
    output_dir = str(raw.get("output.dir", f"out/{name}"))

    if not problems and (spectrum_times or {"nu", "min_eig"} & set(observables)):
        from .phasespace import make_grid
        from .weyl import commensurability
        g = make_grid(grid["nx"] * weyl_refine, grid["np"], grid["x_min"], grid["x_max"],
                      grid["p_min"], grid["p_max"], grid["boundary"])
        try:
            commensurability(g, hbar)
        except ConfigurationError as exc:
            problems.append(f"grid.p_min/grid.p_max: {exc}")

    if problems:
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(problems))

    return ExperimentConfig(raw, text, name, {"type": ptype, **pot}, hbar, grid, init, dt, t_final,
                            moyal, lambda_max, legs, cadence, observables, spectrum_times,
                            snapshot_times, weyl_refine, sme, output_dir, seed, debug)
