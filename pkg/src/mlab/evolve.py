"""Split-step spectral propagators for phase-space distributions.

The distribution is advanced by Strang splitting, ``K(dt/2) P(dt) K(dt/2)``:

* ``K`` free streaming ``f(x, p) -> f(x - p*tau/m, p)``, a phase in the
  (k, p) representation obtained by a real FFT along x;
* ``P`` momentum kicks by the force (classical), the exact two-point kernel
  ``V(x + hbar*theta/2) - V(x - hbar*theta/2)`` (quantum), or a truncated odd
  series of that kernel, plus the diffusion damping ``exp(-D theta^2 dt)``, all
  applied in the (x, theta) representation with ``theta`` conjugate to p.

Conventions: ``chi(x, theta) = int dp f e^{i theta p}``. In the real-FFT
layout along p a chi-phase ``e^{i Phi}`` is a multiplication by ``e^{-i Phi}``.
Nyquist modes receive the nearest real unit (see :mod:`mlab.kernels`) so the
real transforms stay exactly norm- and L2-preserving.

Delta kicks for the kicked rotor are exact impulsive maps applied at integer
multiples of the kick period, before the step that starts there.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from . import kernels
from .errors import (
    ConfigurationError,
    DomainError,
    NumericalBlowupError,
    SequencingError,
    TruncationError,
)
from .observables import TrajectoryRecord
from .phasespace import PhaseSpaceState, boundary_mass, norm
from .potentials import Potential

__all__ = [
    "MODES",
    "EvolutionConfig",
    "kinetic_step",
    "kinetic_half_step",
    "potential_step",
    "kick_step",
    "evolve_to",
    "fft_workers",
]

MODES = ("classical_liouville", "classical_fokker_planck", "quantum_liouville", "quantum_master")
LEAK_LIMIT = 1e-4
TIME_TOL = 1e-9


def fft_workers() -> int:
    """Worker count for transforms, capped by ``MLAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("MLAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class EvolutionConfig:
    """Propagator settings.

    Parameters
    ----------
    mode : str
        One of :data:`MODES`.
    D : float
        Momentum diffusion coefficient. Must be 0 for the Liouville modes.
    dt : float
        Time step.
    moyal : str
        ``"exact_kernel"`` or ``"truncated"``; ignored by classical modes.
    lambda_max : int
        Highest odd order kept when ``moyal == "truncated"``.
    debug : bool
        Check norm conservation after every step.
    """

    mode: str
    D: float = 0.0
    dt: float = 0.01
    moyal: str = "exact_kernel"
    lambda_max: int = 9
    splitting: str = "strang"
    debug: bool = False

    def __post_init__(self):
        problems = []
        if self.mode not in MODES:
            problems.append(f"mode={self.mode!r} not in {MODES}")
        if not (self.D >= 0 and math.isfinite(self.D)):
            problems.append(f"D must be >= 0, got {self.D}")
        elif self.mode in ("classical_liouville", "quantum_liouville") and self.D != 0:
            problems.append(f"mode {self.mode} requires D = 0, got {self.D}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            problems.append(f"dt must be > 0, got {self.dt}")
        if self.moyal not in ("exact_kernel", "truncated"):
            problems.append(f"moyal={self.moyal!r} not in ('exact_kernel', 'truncated')")
        if int(self.lambda_max) != self.lambda_max or self.lambda_max < 1 or self.lambda_max % 2 == 0:
            problems.append(f"lambda_max must be an odd integer >= 1, got {self.lambda_max}")
        if self.splitting != "strang":
            problems.append(f"splitting={self.splitting!r} unsupported (only 'strang')")
        if problems:
            raise ConfigurationError("; ".join(problems))

    @property
    def quantum(self) -> bool:
        return self.mode.startswith("quantum")

    @property
    def kind(self) -> str:
        return "wigner" if self.quantum else "classical"


def _check_kind(state: PhaseSpaceState, config: EvolutionConfig):
    if state.kind != config.kind:
        raise ConfigurationError(f"{config.mode} evolution needs a {config.kind} state, got {state.kind}")


# -- kinetic -------------------------------------------------------------------

def _kinetic_inplace(f: np.ndarray, grid, m: float, tau: float, workers: int) -> np.ndarray:
    if tau == 0.0:
        return f
    shift = grid.p * (tau / m)
    z = sfft.rfft(f, axis=0, workers=workers)
    kernels.apply_separable_phase(z, grid.k[None, :], -shift[None, :], nyq_row=grid.nx // 2)
    return sfft.irfft(z, n=grid.nx, axis=0, workers=workers)


def _flight_inplace(f: np.ndarray, grid, m: float, D: float, tau: float, workers: int) -> np.ndarray:
    """Exact free flight with momentum diffusion for time ``tau``.

    After the shear, the transform over both axes is damped by
    ``exp(-D int_0^tau (theta + k u / m)^2 du)`` (real-FFT sign conventions).
    """
    f = _kinetic_inplace(f, grid, m, tau, workers)
    if D == 0.0 or tau == 0.0:
        return f
    z = sfft.fft(sfft.rfft(f, axis=1, workers=workers), axis=0, workers=workers)
    k = 2.0 * np.pi * np.fft.fftfreq(grid.nx, d=grid.dx)
    th = grid.theta
    a = np.array([np.ones_like(k), k, k**2])
    b = np.array([th**2 * tau, th * tau**2 / m, np.full_like(th, tau**3 / (3 * m * m))])
    z *= np.exp(-D * (a.T @ b))
    return sfft.irfft(sfft.ifft(z, axis=0, workers=workers), n=grid.n_p, axis=1, workers=workers)


def _check_shift(grid, m: float, tau: float):
    # the spectral shear is exact on a periodic axis; on a box it must not wrap
    if grid.periodic:
        return
    top = np.abs(grid.p).max() * abs(tau) / m
    if top > 0.5 * (grid.x_max - grid.x_min):
        raise ConfigurationError(f"free-streaming shift {top:.4g} per step exceeds half the x box; reduce dt")


def kinetic_step(state: PhaseSpaceState, m: float, tau: float) -> PhaseSpaceState:
    """Free streaming for time ``tau``: ``f(x, p) -> f(x - p*tau/m, p)``.

    Raises
    ------
    ConfigurationError
        On a box grid, if the largest shift exceeds half the x extent.
    """
    if not m > 0:
        raise ConfigurationError(f"mass must be > 0, got {m}")
    _check_shift(state.grid, m, tau)
    f = _kinetic_inplace(state.f, state.grid, m, tau, fft_workers())
    return state.evolved(f)


def kinetic_half_step(state: PhaseSpaceState, m: float, dt: float) -> PhaseSpaceState:
    """Half of a Strang kinetic sub-step (streams for ``dt/2``)."""
    return kinetic_step(state, m, 0.5 * dt)


# -- potential -----------------------------------------------------------------

def _series_rows(potential: Potential, x, t, hbar, lam_max, degree):
    """Separable factors of the odd series ``2 sum (u^l / l!) V^(l)(x)``, u = hbar*theta/2."""
    top = lam_max if degree is None else min(lam_max, degree)
    orders = list(range(1, top + 1, 2))
    a = [np.broadcast_to(potential.deriv(x, t, lam), x.shape) for lam in orders]
    return orders, np.array(a)


def _potential_factors(potential: Potential, config: EvolutionConfig, grid, hbar: float,
                       t: float, dt: float):
    """Return ``(A, B)`` or ``(None, Phi)`` for the R-space phase of one potential step."""
    x, th = grid.x, grid.theta
    if potential is None or potential.impulsive:
        return None, None
    if potential.degree == 0:
        return None, None
    if not config.quantum:
        a = np.asarray(potential.dv(x, t), dtype=float)[None, :]
        return a, (dt * th)[None, :]
    if config.moyal == "truncated":
        orders, a = _series_rows(potential, x, t, hbar, config.lambda_max, potential.degree)
    elif potential.degree is not None:
        orders, a = _series_rows(potential, x, t, hbar, potential.degree, potential.degree)
    else:
        u = 0.5 * hbar * th
        return None, (dt / hbar) * potential.difference(x[:, None], u[None, :], t)
    u = 0.5 * hbar * th
    b = np.array([(dt * 2.0 / hbar) * u**lam / math.factorial(lam) for lam in orders])
    return a, b


def _potential_inplace(f, grid, potential, config, hbar, t, dt, workers):
    a, b = _potential_factors(potential, config, grid, hbar, t, dt)
    damp = np.exp(-config.D * grid.theta**2 * dt) if config.D > 0 else None
    if a is None and b is None and damp is None:
        return f
    z = sfft.rfft(f, axis=1, workers=workers)
    nyq = grid.n_p // 2
    if a is None and b is None:
        kernels.apply_dense_phase(z, np.zeros(z.shape), damp, nyq_col=nyq)
    elif a is None:
        kernels.apply_dense_phase(z, b, damp, nyq_col=nyq)
    else:
        kernels.apply_separable_phase(z, a, b, damp, nyq_col=nyq)
    return sfft.irfft(z, n=grid.n_p, axis=1, workers=workers)


def potential_step(state: PhaseSpaceState, potential: Potential, config: EvolutionConfig,
                   t: float, dt: float) -> PhaseSpaceState:
    """Advance the force/Moyal and diffusion terms by ``dt`` with ``V`` frozen at ``t``.

    Callers pass the step midpoint as ``t`` for time-dependent potentials.
    """
    _check_kind(state, config)
    f = _potential_inplace(state.f, state.grid, potential, config, state.hbar, t, dt, fft_workers())
    return state.evolved(f)


# -- kicks ---------------------------------------------------------------------

def _kick_factors(kappa: float, config: EvolutionConfig, grid, hbar: float):
    th = grid.theta
    a = np.sin(grid.x)[None, :]
    if not config.quantum:
        return a, (-kappa * th)[None, :]
    u = 0.5 * hbar * th
    if config.moyal == "truncated":
        # sin u = sum_{odd l} (-1)^((l-1)/2) u^l / l!
        s = sum((-1) ** ((lam - 1) // 2) * u**lam / math.factorial(lam)
                for lam in range(1, config.lambda_max + 1, 2))
    else:
        s = np.sin(u)
    return a, (-2.0 * kappa / hbar * s)[None, :]


def _kick_inplace(f, grid, kappa, config, hbar, workers):
    if kappa == 0:
        return f
    a, b = _kick_factors(kappa, config, grid, hbar)
    z = sfft.rfft(f, axis=1, workers=workers)
    kernels.apply_separable_phase(z, a, b, nyq_col=grid.n_p // 2)
    return sfft.irfft(z, n=grid.n_p, axis=1, workers=workers)


def kick_step(state: PhaseSpaceState, kappa: float, config: EvolutionConfig,
              kick_period: float = 1.0) -> PhaseSpaceState:
    """Exact impulsive map of ``kappa cos q`` at an integer multiple of ``kick_period``.

    Classical states get ``p -> p + kappa sin q``; Wigner functions get the
    chi-phase ``(2 kappa / hbar) sin q sin(hbar theta / 2)``.

    Raises
    ------
    DomainError
        On a box grid.
    SequencingError
        If ``state.t`` is not within 1e-9 of a kick time.
    """
    if not state.grid.periodic:
        raise DomainError("kicks need a periodic_x grid")
    n = state.t / kick_period
    if abs(n - round(n)) > TIME_TOL:
        raise SequencingError(f"kick requested at t={state.t}, not a multiple of {kick_period}")
    _check_kind(state, config)
    return state.evolved(_kick_inplace(state.f, state.grid, kappa, config, state.hbar, fft_workers()))


# -- orchestration -------------------------------------------------------------

def _steps(t: float, dt: float, what: str) -> int:
    n = t / dt
    if abs(n - round(n)) > TIME_TOL * max(1.0, abs(n)):
        raise SequencingError(f"{what} t={t} is not a multiple of dt={dt}")
    return int(round(n))


@dataclass
class _Schedule:
    n0: int
    n1: int
    cadence: int | None
    kick_every: int | None
    extra: set = field(default_factory=set)

    def observe(self, n: int) -> bool:
        if n == self.n0 or n == self.n1 or n in self.extra:
            return True
        return self.cadence is not None and n % self.cadence == 0

    def kick(self, n: int) -> bool:
        return self.kick_every is not None and n % self.kick_every == 0


def evolve_to(state: PhaseSpaceState, potential: Potential, config: EvolutionConfig,
              t_final: float, observers: dict | None = None, cadence: float | None = None,
              check_leakage: bool = True, observe_at=()):
    """Run Strang splitting from ``state.t`` to ``t_final``.

    Time is tracked as a global step index ``n`` with ``t = n*dt``, so a run
    split at any observation time and resumed reproduces the uninterrupted run
    bit for bit. Kinetic half steps are merged between observation points and
    kicks. Observers (``name -> callable(state)``) are evaluated at the start,
    every ``cadence`` (aligned to multiples of ``cadence`` from t=0), at the
    times in ``observe_at`` and at the end.

    Returns
    -------
    record : TrajectoryRecord
    final : PhaseSpaceState

    Raises
    ------
    TruncationError
        Boundary mass above 1e-4 at an observation point.
    NumericalBlowupError
        Non-finite values.
    SequencingError
        ``t_final``, ``state.t``, cadence or the kick period not on the dt lattice.
    """
    _check_kind(state, config)
    dt = config.dt
    n0 = _steps(state.t, dt, "start")
    n1 = _steps(t_final, dt, "final")
    if n1 <= n0:
        raise SequencingError(f"t_final={t_final} must exceed the state time {state.t}")
    cad = _steps(cadence, dt, "cadence") if cadence else None
    kick_every = _steps(potential.kick_period, dt, "kick period") if potential.impulsive else None
    if kick_every is not None and not state.grid.periodic:
        raise DomainError("kicked systems need a periodic_x grid")
    extra = {_steps(t, dt, "observation") for t in observe_at}
    sched = _Schedule(n0, n1, cad, kick_every, extra)

    _check_shift(state.grid, potential.m, dt)
    observers = observers or {}
    grid, m, hbar = state.grid, potential.m, state.hbar
    workers = fft_workers()
    f = state.f.copy()
    times, values = [], {name: [] for name in observers}
    reference_norm = norm(state)

    def observe(n, f):
        s = state.evolved(f, t=n * dt)
        if not np.isfinite(f).all():
            raise NumericalBlowupError(f"non-finite values at t={n * dt}")
        if check_leakage:
            leak = boundary_mass(s)
            if leak > LEAK_LIMIT:
                raise TruncationError(f"boundary mass {leak:.3e} > {LEAK_LIMIT} at t={n * dt}")
        times.append(n * dt)
        for name, fn in observers.items():
            values[name].append(float(fn(s)))

    # with no smooth force the whole interval between kicks is solved exactly
    free_flight = potential.impulsive or potential.degree == 0
    D = config.D

    def flush(f, tau):
        if free_flight:
            return _flight_inplace(f, grid, m, D, tau, workers)
        return _kinetic_inplace(f, grid, m, tau, workers)

    meta = {"mode": config.mode, "dt": dt, "D": config.D, "hbar": hbar,
            "potential": type(potential).__name__, "backend": kernels.BACKEND}
    try:
        f = _run_steps(f, sched, observe, flush, free_flight, grid, potential, config, hbar,
                       workers, reference_norm)
    except (TruncationError, NumericalBlowupError) as exc:
        # keep what was observed before the failure for the caller's diagnostics
        exc.partial = TrajectoryRecord(np.array(times), values, meta)
        raise
    return TrajectoryRecord(np.array(times), values, meta), state.evolved(f, t=n1 * dt)


def _run_steps(f, sched, observe, flush, free_flight, grid, potential, config, hbar, workers,
               reference_norm):
    dt, m, n0, n1 = config.dt, potential.m, sched.n0, sched.n1
    observe(n0, f)
    pending = 0.0
    for n in range(n0, n1):
        if sched.kick(n):
            f = flush(f, pending)
            pending = 0.0
            f = _kick_inplace(f, grid, potential.kappa, config, hbar, workers)
        if free_flight:
            pending += dt
        else:
            f = _kinetic_inplace(f, grid, m, pending + 0.5 * dt, workers)
            f = _potential_inplace(f, grid, potential, config, hbar, (n + 0.5) * dt, dt, workers)
            pending = 0.5 * dt
        if config.debug:
            drift = abs(f.sum() * grid.cell_area - reference_norm)
            if drift > 1e-8:
                raise NumericalBlowupError(f"norm drift {drift:.3e} at step {n + 1}")
        if sched.observe(n + 1):
            f = flush(f, pending)
            pending = 0.0
            observe(n + 1, f)
    return f
