"""Continuous position measurement: conditioned trajectories and their ensembles.

States live on a uniform position lattice ``x_a = x0 + a*h`` either as a
density matrix ``M`` (operator units, ``trace M = 1``) or, for efficiency
``eta = 1``, as a normalized wavefunction ``psi``. A step of length ``dt`` is

    [kick] -> K(dt/2) -> V(t + dt/2) -> measurement -> K(dt/2)

where ``K`` and ``V`` are exact unitary substeps and the measurement is one of

* ``"kraus"`` (default): the Gaussian operation
  ``M_ab <- M_ab exp(-k dt (x_a - x_b)^2) exp(-4 eta k dt (xbar_ab - r)^2)``
  followed by normalization, with the outcome ``r`` drawn from its Born
  distribution. It is positive, keeps pure states pure at ``eta = 1``, and
  its ensemble average is exactly the decoherence channel
  ``exp(-k dt (x_a - x_b)^2)``;
* ``"euler_maruyama_normalized"``: the first-order update
  ``M += -k dt [X,[X,M]] + sqrt(2 eta k) ({X,M} - 2 M <X>) dW`` followed by
  trace renormalization.

The record sample of each step is ``r = <X> + dW / (dt sqrt(8 eta k))``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateForceError,
    MisuseError,
    NumericalBlowupError,
    SequencingError,
    StepSizeError,
)
from .observables import TrajectoryRecord
from .phasespace import PhaseSpaceState
from .potentials import Potential, force_stats

__all__ = [
    "SCHEMES",
    "SmeConfig",
    "Lattice",
    "MeasurementRecord",
    "LocalizationRatio",
    "trajectory_rng",
    "gaussian_wavefunction",
    "lattice_observables",
    "sme_step",
    "run_trajectory",
    "run_ensemble",
    "ensemble_average",
    "localization_ratio",
]

SCHEMES = ("kraus", "euler_maruyama_normalized")
NEGATIVE_POPULATION_LIMIT = 1e-3


@dataclass(frozen=True)
class SmeConfig:
    """Measurement strength ``k``, efficiency ``eta``, step, ensemble size and seed."""

    k: float
    eta: float = 1.0
    dt: float = 0.01
    n_traj: int = 1
    seed: int = 0
    scheme: str = "kraus"

    def __post_init__(self):
        problems = []
        if not (self.k >= 0 and math.isfinite(self.k)):
            problems.append(f"k must be >= 0, got {self.k}")
        if not 0.0 <= self.eta <= 1.0:
            problems.append(f"eta must lie in [0, 1], got {self.eta}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            problems.append(f"dt must be > 0, got {self.dt}")
        if int(self.n_traj) != self.n_traj or self.n_traj < 1:
            problems.append(f"n_traj must be a positive integer, got {self.n_traj}")
        if not 0 <= int(self.seed) < 2**64:
            problems.append(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.scheme not in SCHEMES:
            problems.append(f"scheme={self.scheme!r} not in {SCHEMES}")
        if problems:
            raise ConfigurationError("; ".join(problems))

    def diffusion(self, hbar: float) -> float:
        """Momentum diffusion ``D = hbar^2 k`` of the unconditioned dynamics."""
        return hbar * hbar * self.k


@dataclass(frozen=True)
class Lattice:
    """Uniform position lattice; ``periodic`` lattices wrap (rings of length ``n*h``)."""

    n: int
    h: float
    x0: float
    periodic: bool = False

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    @classmethod
    def from_grid(cls, grid, hbar: float) -> "Lattice":
        """The Weyl lattice of a commensurate phase-space grid."""
        from .weyl import commensurability

        r = commensurability(grid, hbar)
        return cls(grid.nx // (2 * r), 2 * r * grid.dx, grid.x_min, grid.periodic)


@dataclass
class MeasurementRecord:
    """Per-step measurement outcomes with the noise increments that produced them."""

    times: np.ndarray
    record: np.ndarray
    dW: np.ndarray
    seed: int = 0
    traj_index: int = 0
    informative: bool = True
    rng_state: dict | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.record = np.asarray(self.record, dtype=float)
        self.dW = np.asarray(self.dW, dtype=float)
        if not (self.times.shape == self.record.shape == self.dW.shape):
            raise MisuseError("record, dW and times must have equal length")
        if not np.isfinite(self.record).all():
            raise NumericalBlowupError("measurement record has non-finite entries")


def trajectory_rng(seed: int, traj_index: int) -> np.random.Generator:
    """Counter-based stream for one trajectory, independent of scheduling."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(traj_index)])))


def gaussian_wavefunction(lattice: Lattice, x0: float, p0: float, dx_width: float,
                          hbar: float) -> np.ndarray:
    """Minimum-uncertainty packet with position width ``dx_width``, unit discrete norm.

    On a periodic lattice the packet is built at the nearest image of ``x0``.
    """
    x = lattice.x
    d = x - x0
    if lattice.periodic:
        length = lattice.n * lattice.h
        d = (d + length / 2) % length - length / 2
    psi = np.exp(-d**2 / (4 * dx_width**2) + 1j * p0 * x / hbar)
    return psi / np.linalg.norm(psi)


# -- unitary substeps ----------------------------------------------------------

def _apply(op, state, pure: bool):
    """``op`` acts on vectors along axis 0; returns ``U psi`` or ``U M U^dagger``."""
    if pure:
        return op(state)
    a = op(state)
    return op(a.conj().T).conj().T


def _kinetic(state, lattice: Lattice, m: float, hbar: float, tau: float, pure: bool):
    if tau == 0.0:
        return state
    phase = np.exp(-0.5j * hbar * lattice.k**2 * tau / m)
    if pure:
        return np.fft.ifft(phase * np.fft.fft(state))

    def op(a):
        return np.fft.ifft(phase[:, None] * np.fft.fft(a, axis=0), axis=0)

    return _apply(op, state, pure)


def _diagonal(state, u: np.ndarray, pure: bool):
    if pure:
        return u * state
    return u[:, None] * state * u.conj()[None, :]


def lattice_observables(state, lattice: Lattice, hbar: float, pure: bool) -> dict:
    """``<X>``, ``<P>``, ``<P^2>`` and the purity of a lattice state."""
    x = lattice.x
    p = hbar * lattice.k
    if pure:
        px = np.abs(state) ** 2
        pp = np.abs(np.fft.fft(state)) ** 2 / lattice.n
        pur = 1.0
    else:
        px = np.real(np.diag(state))
        pp = np.real(np.diag(np.fft.ifft(np.fft.fft(state, axis=0), axis=1)))
        pur = float(np.sum(np.abs(state) ** 2))
    px_sum, pp_sum = px.sum(), pp.sum()
    return {
        "x": float(x @ px / px_sum),
        "p": float(p @ pp / pp_sum),
        "p2": float(p**2 @ pp / pp_sum),
        "purity": pur,
    }


# -- measurement ---------------------------------------------------------------

def _measure(state, lattice: Lattice, config: SmeConfig, rng, pure: bool):
    """Apply one measurement; returns ``(state, record_value, dW)``."""
    x = lattice.x
    dt, k, eta = config.dt, config.k, config.eta
    if pure:
        px = np.abs(state) ** 2
        px = px / px.sum()
    else:
        px = np.clip(np.real(np.diag(state)), 0.0, None)
        px = px / px.sum()
    mean_x = float(x @ px)
    if k == 0.0:
        return state, mean_x, 0.0
    if config.scheme == "euler_maruyama_normalized":
        if pure:
            raise MisuseError("the Euler-Maruyama scheme needs a density matrix")
        dW = float(rng.standard_normal()) * math.sqrt(dt)
        diff = x[:, None] - x[None, :]
        plus = x[:, None] + x[None, :]
        new = state + (-k * dt * diff**2 + math.sqrt(2 * eta * k) * (plus - 2 * mean_x) * dW) * state
        # the update keeps the trace exactly; a too-large step shows up as negative populations
        pops = np.real(np.diag(new))
        tr = float(pops.sum())
        if pops.min() < -NEGATIVE_POPULATION_LIMIT * tr:
            raise StepSizeError(f"population fell to {pops.min():.3g} in one step; reduce dt")
        new = new / tr
        new = 0.5 * (new + new.conj().T)
        rec = mean_x + (dW / (dt * math.sqrt(8 * eta * k)) if eta > 0 else 0.0)
        return new, rec, dW
    if eta == 0.0:
        diff = x[:, None] - x[None, :]
        return state * np.exp(-k * dt * diff**2), mean_x, 0.0
    # outcome from its Born distribution: a lattice site, then Gaussian readout noise
    sigma = 1.0 / math.sqrt(8 * eta * k * dt)
    site = int(np.searchsorted(np.cumsum(px), rng.random() * 1.0, side="right"))
    site = min(site, lattice.n - 1)
    r = float(x[site] + sigma * rng.standard_normal())
    if pure:
        if eta != 1.0:
            raise MisuseError("wavefunction trajectories need eta = 1")
        new = state * np.exp(-2 * k * dt * (x - r) ** 2)
        new = new / np.linalg.norm(new)
    else:
        diff = x[:, None] - x[None, :]
        mid = 0.5 * (x[:, None] + x[None, :])
        new = state * np.exp(-k * dt * diff**2 - 4 * eta * k * dt * (mid - r) ** 2)
        new = new / np.real(np.trace(new))
        new = 0.5 * (new + new.conj().T)
    dW = (r - mean_x) * dt * math.sqrt(8 * eta * k)
    return new, r, dW


def sme_step(state, lattice: Lattice, potential: Potential, config: SmeConfig, t: float,
             hbar: float, rng=None, kick: bool = False):
    """One conditioned step from ``t`` to ``t + dt``.

    ``state`` is a wavefunction (1-D) or a density matrix (2-D, trace 1).
    Returns ``(new_state, record_value, dW)``.
    """
    pure = np.ndim(state) == 1
    dt, m = config.dt, potential.m
    if rng is None:
        rng = trajectory_rng(config.seed, 0)
    if kick:
        state = _diagonal(state, np.exp(-1j * potential.v(lattice.x, t) / hbar), pure)
    state = _kinetic(state, lattice, m, hbar, 0.5 * dt, pure)
    if not potential.impulsive and potential.degree != 0:
        u = np.exp(-1j * potential.v(lattice.x, t + 0.5 * dt) * dt / hbar)
        state = _diagonal(state, u, pure)
    state, rec, dW = _measure(state, lattice, config, rng, pure)
    state = _kinetic(state, lattice, m, hbar, 0.5 * dt, pure)
    if not pure:
        state = 0.5 * (state + state.conj().T)
    return state, rec, dW


def _steps(t: float, dt: float, what: str) -> int:
    n = t / dt
    if abs(n - round(n)) > 1e-9 * max(1.0, abs(n)):
        raise SequencingError(f"{what} t={t} is not a multiple of dt={dt}")
    return int(round(n))


def run_trajectory(state0, lattice: Lattice, potential: Potential, config: SmeConfig,
                   t_final: float, hbar: float, traj_index: int = 0, t0: float = 0.0,
                   log_every: float | None = None, rng=None):
    """Integrate one conditioned trajectory from ``t0`` to ``t_final``.

    Kicks of an impulsive potential are applied at multiples of its period
    before the step starting there. Observables ``x``, ``p``, ``p2`` and
    ``purity`` are logged at ``t0``, every ``log_every`` (aligned to t = 0) and
    at the end. Pass ``rng`` (e.g. restored from ``MeasurementRecord.rng_state``)
    to continue an interrupted trajectory.

    Returns
    -------
    state : ndarray
    measurement : MeasurementRecord
    record : TrajectoryRecord
    """
    pure = np.ndim(state0) == 1
    state = np.array(state0, dtype=complex)
    dt = config.dt
    n0, n1 = _steps(t0, dt, "start"), _steps(t_final, dt, "final")
    if n1 <= n0:
        raise SequencingError(f"t_final={t_final} must exceed t0={t0}")
    every = _steps(log_every, dt, "log cadence") if log_every else None
    kick_every = _steps(potential.kick_period, dt, "kick period") if potential.impulsive else None
    if rng is None:
        rng = trajectory_rng(config.seed, traj_index)

    times, series = [], {"x": [], "p": [], "p2": [], "purity": []}

    def log(n):
        obs = lattice_observables(state, lattice, hbar, pure)
        times.append(n * dt)
        for key in series:
            series[key].append(obs[key])

    rec_t = np.empty(n1 - n0)
    rec_v = np.empty(n1 - n0)
    rec_w = np.empty(n1 - n0)
    log(n0)
    for i, n in enumerate(range(n0, n1)):
        kick = kick_every is not None and n % kick_every == 0
        state, rec_v[i], rec_w[i] = sme_step(state, lattice, potential, config, n * dt, hbar, rng, kick)
        rec_t[i] = (n + 1) * dt
        if not np.isfinite(rec_v[i]):
            raise NumericalBlowupError(f"non-finite measurement at t={(n + 1) * dt}")
        last = n + 1 == n1
        if last or (every and (n + 1) % every == 0):
            if not np.all(np.isfinite(state)):
                raise NumericalBlowupError(f"non-finite state at t={(n + 1) * dt}")
            log(n + 1)

    informative = config.k > 0 and config.eta > 0
    meas = MeasurementRecord(rec_t, rec_v, rec_w, config.seed, traj_index, informative,
                             rng.bit_generator.state)
    meta = {"k": config.k, "eta": config.eta, "dt": dt, "scheme": config.scheme,
            "seed": config.seed, "traj_index": traj_index, "hbar": hbar,
            "potential": type(potential).__name__, "n": lattice.n, "h": lattice.h}
    return state, meas, TrajectoryRecord(np.array(times), series, meta)


def _ensemble_worker(args):
    state0, lattice, potential, config, t_final, hbar, idx, log_every = args
    _, meas, rec = run_trajectory(state0, lattice, potential, config, t_final, hbar, idx,
                                  log_every=log_every)
    return meas, rec


def run_ensemble(state0, lattice: Lattice, potential: Potential, config: SmeConfig,
                 t_final: float, hbar: float, log_every: float | None = None,
                 workers: int | None = None):
    """Run ``config.n_traj`` trajectories; results do not depend on ``workers``.

    ``workers`` defaults to ``MLAB_THREADS`` (1 when unset).
    """
    if workers is None:
        workers = max(1, int(os.environ.get("MLAB_THREADS", "1") or 1))
    jobs = [(state0, lattice, potential, config, t_final, hbar, i, log_every)
            for i in range(config.n_traj)]
    if workers == 1 or config.n_traj == 1:
        out = [_ensemble_worker(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_ensemble_worker, jobs))
    return [m for m, _ in out], [r for _, r in out]


_CONFIG_KEYS = ("k", "eta", "dt", "scheme", "seed", "hbar", "potential", "n", "h")


def ensemble_average(records) -> TrajectoryRecord:
    """Mean and standard error of every logged series across trajectories.

    Series ``<name>_mean`` and ``<name>_se`` are returned; with a single
    trajectory the standard error is NaN and ``metadata['se_defined']`` is False.

    Raises
    ------
    MisuseError
        Records from different configurations or time grids.
    """
    records = list(records)
    if not records:
        raise MisuseError("no trajectories to average")
    ref = records[0]
    for rec in records[1:]:
        if any(rec.metadata.get(key) != ref.metadata.get(key) for key in _CONFIG_KEYS):
            raise MisuseError("trajectories come from different configurations")
        if rec.times.shape != ref.times.shape or not np.array_equal(rec.times, ref.times):
            raise MisuseError("trajectories have different time grids")
    indices = [rec.metadata.get("traj_index") for rec in records]
    if len(records) > 1 and len(set(indices)) != len(indices):
        raise MisuseError("trajectories share a sub-seed")
    n = len(records)
    out = {}
    for name in ref.names:
        stack = np.array([rec[name] for rec in records])
        out[f"{name}_mean"] = stack.mean(axis=0)
        out[f"{name}_se"] = (stack.std(axis=0, ddof=1) / math.sqrt(n)) if n > 1 else np.full(len(ref), np.nan)
    meta = {key: ref.metadata.get(key) for key in _CONFIG_KEYS}
    meta.update(n_traj=n, se_defined=n > 1)
    return TrajectoryRecord(ref.times, out, meta)


@dataclass
class LocalizationRatio:
    """``r = 8 eta k / [(|F''|/|F|) sqrt(|F'|/2m)]`` at the typical points."""

    min: float
    median: float
    max: float
    ratios: np.ndarray
    points: np.ndarray
    rhs: np.ndarray = field(repr=False, default=None)


def localization_ratio(potential: Potential, state: PhaseSpaceState, k: float, eta: float,
                       t: float | None = None) -> LocalizationRatio:
    """Evaluate the trajectory-localization inequality at the state's typical points.

    Magnitudes are used throughout. Points where ``F`` or ``F'`` vanishes are
    skipped.

    Raises
    ------
    DegenerateForceError
        Linear force (``F'' = 0`` everywhere) or no usable point.
    """
    fs = force_stats(potential, state, t)
    if fs.linear:
        raise DegenerateForceError("force is linear; the localization condition is undefined")
    F, dF, d2F = np.abs(fs.F), np.abs(fs.dF), np.abs(fs.d2F)
    scale = max(1.0, float(F.max()))
    ok = (F > 1e-12 * scale) & (dF > 0) & (d2F > 0)
    if not ok.any():
        raise DegenerateForceError("no typical point has a usable force")
    rhs = np.full(F.shape, np.nan)
    rhs[ok] = (d2F[ok] / F[ok]) * np.sqrt(dF[ok] / (2 * potential.m))
    ratios = 8 * eta * k / rhs
    good = ratios[ok]
    return LocalizationRatio(float(good.min()), float(np.median(good)), float(good.max()),
                             ratios, fs.points, rhs)
