"""System potentials, their x-derivatives, and force statistics.

Every potential is analytic on the whole real line, so propagators can
evaluate it at the shifted points ``x ± ħθ/2`` without touching the grid.
The kicked rotor's delta train is never sampled in time; its smooth part
``κ cos q`` is exposed for diagnostics and the kick itself is applied by
:func:`mlab.evolve.kick_step`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DegenerateForceError
from .phasespace import PhaseSpaceState, marginal_x

__all__ = [
    "Potential",
    "Duffing",
    "KickedRotor",
    "Harmonic",
    "FreeParticle",
    "force_stats",
    "ForceStats",
    "from_params",
]


class Potential:
    """Base class. Subclasses implement :meth:`deriv`."""

    m: float = 1.0
    #: highest non-vanishing derivative order, or None if the series never terminates
    degree: int | None = None
    #: True when the potential acts only through impulsive kicks
    impulsive: bool = False

    def deriv(self, x, t: float, order: int):
        raise NotImplementedError

    def v(self, x, t: float = 0.0):
        return self.deriv(x, t, 0)

    def dv(self, x, t: float = 0.0):
        return self.deriv(x, t, 1)

    def d2v(self, x, t: float = 0.0):
        return self.deriv(x, t, 2)

    def d3v(self, x, t: float = 0.0):
        return self.deriv(x, t, 3)

    def difference(self, x, u, t: float = 0.0):
        """``V(x+u) - V(x-u)`` evaluated in closed form (broadcasts)."""
        return self.v(np.add(x, u), t) - self.v(np.subtract(x, u), t)

    def params(self) -> dict:
        return {k: v for k, v in vars(self).items()}


@dataclass
class Duffing(Potential):
    """Driven double well ``B x^4 - A x^2 + Λ x cos(ωt)``."""

    m: float = 1.0
    A: float = 10.0
    B: float = 0.5
    Lambda: float = 10.0
    omega: float = 6.07
    degree: int = field(default=4, init=False, repr=False)

    def __post_init__(self):
        if not (self.m > 0 and self.B > 0):
            raise ConfigurationError("Duffing needs m > 0 and B > 0")

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    def deriv(self, x, t: float, order: int):
        x = np.asarray(x, dtype=float)
        drive = self.Lambda * math.cos(self.omega * t)
        B, A = self.B, self.A
        if order == 0:
            return B * x**4 - A * x**2 + drive * x
        if order == 1:
            return 4 * B * x**3 - 2 * A * x + drive
        if order == 2:
            return 12 * B * x**2 - 2 * A
        if order == 3:
            return 24 * B * x
        if order == 4:
            return np.full_like(x, 24 * B)
        return np.zeros_like(x)


@dataclass
class KickedRotor(Potential):
    """``κ cos q`` applied impulsively at integer multiples of ``kick_period``."""

    kappa: float = 10.0
    kick_period: float = 1.0
    m: float = 1.0
    impulsive: bool = field(default=True, init=False, repr=False)

    def deriv(self, x, t: float, order: int):
        # d^n/dq^n cos q = cos(q + n*pi/2)
        x = np.asarray(x, dtype=float)
        if order % 4 == 0:
            return self.kappa * np.cos(x)
        if order % 4 == 2:
            return -self.kappa * np.cos(x)
        if order % 4 == 1:
            return -self.kappa * np.sin(x)
        return self.kappa * np.sin(x)

    def difference(self, x, u, t: float = 0.0):
        # cos(q+u) - cos(q-u) = -2 sin q sin u
        return -2.0 * self.kappa * np.sin(x) * np.sin(u)


@dataclass
class Harmonic(Potential):
    """``m ω0^2 x^2 / 2``."""

    m: float = 1.0
    omega0: float = 1.0
    degree: int = field(default=2, init=False, repr=False)

    def __post_init__(self):
        if not self.m > 0:
            raise ConfigurationError("Harmonic needs m > 0")

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega0

    def deriv(self, x, t: float, order: int):
        x = np.asarray(x, dtype=float)
        c = self.m * self.omega0**2
        if order == 0:
            return 0.5 * c * x**2
        if order == 1:
            return c * x
        if order == 2:
            return np.full_like(x, c)
        return np.zeros_like(x)


@dataclass
class FreeParticle(Potential):
    m: float = 1.0
    degree: int = field(default=0, init=False, repr=False)

    def deriv(self, x, t: float, order: int):
        return np.zeros_like(np.asarray(x, dtype=float))


_TYPES = {
    "duffing": Duffing,
    "kicked_rotor": KickedRotor,
    "harmonic": Harmonic,
    "free": FreeParticle,
}


def from_params(kind: str, **params) -> Potential:
    """Build a potential from a type name and keyword parameters."""
    try:
        cls = _TYPES[kind]
    except KeyError:
        raise ConfigurationError(f"unknown potential type {kind!r}; expected one of {sorted(_TYPES)}")
    return cls(**params)


@dataclass
class ForceStats:
    """Force ``F = -V'`` and its x-derivatives at the typical points of a state.

    ``points`` are the 25th/50th/75th percentiles of the x-marginal and
    ``weights`` the normalized marginal density there.
    """

    points: np.ndarray
    weights: np.ndarray
    F: np.ndarray
    dF: np.ndarray
    d2F: np.ndarray
    median_abs_force: float
    linear: bool


def _percentile_positions(x: np.ndarray, dx: float, density: np.ndarray, qs) -> np.ndarray:
    w = np.clip(density, 0.0, None) * dx
    cdf = np.concatenate([[0.0], np.cumsum(w)])
    cdf /= cdf[-1]
    edges = np.concatenate([[x[0] - dx / 2], x + dx / 2])
    return np.interp(qs, cdf, edges)


def _weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    order = np.argsort(values)
    cw = np.cumsum(weights[order])
    return float(values[order][np.searchsorted(cw, 0.5 * cw[-1])])


def force_stats(potential: Potential, state: PhaseSpaceState, t: float | None = None) -> ForceStats:
    """Evaluate ``F``, ``∂F`` and ``∂²F`` at the state's typical points.

    Raises
    ------
    DegenerateForceError
        If ``F`` vanishes at every sampled point.
    """
    t = state.t if t is None else t
    g = state.grid
    mx = marginal_x(state)
    pts = _percentile_positions(g.x, g.dx, mx, [0.25, 0.5, 0.75])
    dens = np.interp(pts, g.x, np.clip(mx, 0.0, None))
    weights = dens / dens.sum() if dens.sum() > 0 else np.full(3, 1 / 3)
    F = -np.asarray(potential.dv(pts, t), dtype=float)
    dF = -np.asarray(potential.d2v(pts, t), dtype=float)
    d2F = -np.asarray(potential.d3v(pts, t), dtype=float)
    scale = max(1.0, float(np.max(np.abs(potential.v(g.x, t)))))
    if np.all(np.abs(F) <= 1e-12 * scale):
        raise DegenerateForceError("force vanishes at all typical points")
    mabs = _weighted_median(np.abs(potential.dv(g.x, t)), np.clip(mx, 0.0, None))
    return ForceStats(pts, weights, F, dF, d2F, mabs, bool(np.all(d2F == 0.0)))
