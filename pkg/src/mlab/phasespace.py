"""Phase-space grids, distribution containers, Gaussian initial data and grid integrals.

A distribution ``f`` is stored x-major: ``f[i, j]`` is the value at
``(x[i], p[j])`` with ``x[i] = x_min + i*dx`` and ``p[j] = p_min + j*dp``.
Integrals are midpoint (Riemann) sums over the cells.
"""
from __future__ import annotations

import copy
import math
import struct
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ResolutionError, TruncationError, TruncationWarning

__all__ = [
    "PhaseSpaceGrid",
    "PhaseSpaceState",
    "make_grid",
    "gaussian_state",
    "norm",
    "marginal_x",
    "marginal_p",
    "moment",
    "boundary_mass",
    "refine_x",
    "write_snapshot",
    "read_snapshot",
    "export_csv",
]

BOUNDARIES = ("periodic_x", "box")
KINDS = ("classical", "wigner")

SNAPSHOT_MAGIC = b"MLAB"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIII6dBdd")


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Rectangular (x, p) grid with its Fourier-conjugate axes.

    Use :func:`make_grid` to build one; it validates the arguments.
    """

    nx: int
    n_p: int
    x_min: float
    x_max: float
    p_min: float
    p_max: float
    boundary: str = "box"

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / self.n_p

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic_x"

    @property
    def cells(self) -> int:
        """Number of 2*pi periods spanned by a periodic x axis (0 for box grids)."""
        return round((self.x_max - self.x_min) / (2 * math.pi)) if self.periodic else 0

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.n_p)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dp

    @cached_property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.nx)

    @cached_property
    def p(self) -> np.ndarray:
        return self.p_min + self.dp * np.arange(self.n_p)

    @cached_property
    def k(self) -> np.ndarray:
        """Wavenumbers conjugate to x in real-FFT order (length nx//2 + 1)."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.nx, d=self.dx)

    @cached_property
    def theta(self) -> np.ndarray:
        """Variable conjugate to p in real-FFT order (length n_p//2 + 1)."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.n_p, d=self.dp)

    @property
    def k_max(self) -> float:
        return math.pi / self.dx

    @property
    def theta_max(self) -> float:
        return math.pi / self.dp

    def bounds(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.x_max, self.p_min, self.p_max)


def make_grid(
    nx: int,
    n_p: int,
    x_min: float,
    x_max: float,
    p_min: float,
    p_max: float,
    boundary: str = "box",
) -> PhaseSpaceGrid:
    """Build and validate a phase-space grid.

    Raises
    ------
    ConfigurationError
        Sizes that are not powers of two >= 8, inverted bounds, an unknown
        boundary, or a periodic x-extent that is not a whole number of 2*pi
        periods. One period is the rotor angle; M > 1 periods unfold the
        rotor onto a ring of M cells, which keeps a line Gaussian pure.
    """
    problems = []
    for name, n in (("nx", nx), ("np", n_p)):
        if int(n) != n or not _is_pow2(int(n)) or n < 8:
            problems.append(f"{name}={n} must be a power of two >= 8")
    if not x_max > x_min:
        problems.append(f"x bounds inverted: x_min={x_min}, x_max={x_max}")
    if not p_max > p_min:
        problems.append(f"p bounds inverted: p_min={p_min}, p_max={p_max}")
    if boundary not in BOUNDARIES:
        problems.append(f"boundary={boundary!r} not in {BOUNDARIES}")
    elif boundary == "periodic_x":
        cells = (x_max - x_min) / (2 * math.pi)
        if round(cells) < 1 or not math.isclose(cells, round(cells), rel_tol=1e-12):
            problems.append(f"periodic_x needs x_max - x_min = 2*pi*M for an integer M >= 1, "
                            f"got {x_max - x_min!r}")
    if problems:
        raise ConfigurationError("; ".join(problems))
    return PhaseSpaceGrid(int(nx), int(n_p), float(x_min), float(x_max),
                          float(p_min), float(p_max), boundary)


@dataclass
class PhaseSpaceState:
    """A real distribution on a grid, tagged ``classical`` or ``wigner``.

    Classical distributions must be non-negative when built from user data;
    Wigner functions may take negative values.
    """

    grid: PhaseSpaceGrid
    f: np.ndarray
    kind: str = "classical"
    hbar: float = 1.0
    t: float = 0.0

    def __post_init__(self):
        self.f = np.ascontiguousarray(self.f, dtype=np.float64)
        if self.f.shape != self.grid.shape:
            raise ConfigurationError(f"f has shape {self.f.shape}, grid is {self.grid.shape}")
        if self.kind not in KINDS:
            raise ConfigurationError(f"kind={self.kind!r} not in {KINDS}")
        if not self.hbar > 0:
            raise ConfigurationError(f"hbar must be > 0, got {self.hbar}")
        if not np.isfinite(self.f).all():
            raise ConfigurationError("distribution has non-finite entries")
        if self.kind == "classical" and self.f.min() < -1e-12:
            raise ConfigurationError(
                f"classical distribution has negative entries (min {self.f.min():.3e})")

    def evolved(self, f: np.ndarray, t: float | None = None) -> "PhaseSpaceState":
        """Copy with new values and time, skipping construction-time checks."""
        new = copy.copy(self)
        new.f = f
        if t is not None:
            new.t = t
        return new

    def normalized(self) -> "PhaseSpaceState":
        return self.evolved(self.f / norm(self))


def _gaussian_profile(u: np.ndarray, u0: float, sigma: float, period: float | None) -> np.ndarray:
    g = np.exp(-0.5 * ((u - u0) / sigma) ** 2)
    if period is None:
        return g
    # sum images until they stop contributing
    n = 1
    while True:
        add = (np.exp(-0.5 * ((u - u0 + n * period) / sigma) ** 2)
               + np.exp(-0.5 * ((u - u0 - n * period) / sigma) ** 2))
        g = g + add
        if add.max() < 1e-14 * g.max():
            return g
        n += 1


def _points_within(values: np.ndarray, center: float, half_width: float, period: float | None) -> int:
    d = values - center
    if period is not None:
        d = (d + period / 2) % period - period / 2
    return int(np.count_nonzero(np.abs(d) <= half_width))


def gaussian_state(
    grid: PhaseSpaceGrid,
    x0: float,
    p0: float,
    dx_width: float,
    dp_width: float,
    kind: str = "wigner",
    hbar: float = 1.0,
    *,
    check_min_uncertainty: bool = False,
) -> PhaseSpaceState:
    """Normalized uncorrelated Gaussian ``exp[-(x-x0)^2/2Δx^2 - (p-p0)^2/2Δp^2]``.

    On a ``periodic_x`` grid the x-profile is wrapped (summed over images).
    ``check_min_uncertainty`` additionally requires ``Δx·Δp = ħ/2``, which
    makes a Wigner Gaussian a pure state.
    """
    if not (dx_width > 0 and dp_width > 0):
        raise ConfigurationError("Gaussian widths must be positive")
    if check_min_uncertainty and not math.isclose(dx_width * dp_width, hbar / 2, rel_tol=1e-9):
        raise ConfigurationError(
            f"dx_width*dp_width = {dx_width * dp_width!r} differs from hbar/2 = {hbar / 2!r}")
    period = grid.x_max - grid.x_min if grid.periodic else None
    for name, vals, c, w, per in (("x", grid.x, x0, dx_width, period),
                                  ("p", grid.p, p0, dp_width, None)):
        if _points_within(vals, c, 3 * w, per) < 4:
            raise ResolutionError(f"{name}-width {w} is resolved by fewer than 4 points within 3 sigma")
    if not grid.periodic and (x0 - 3 * dx_width < grid.x_min or x0 + 3 * dx_width > grid.x_max):
        raise TruncationError(f"x support [{x0 - 3 * dx_width}, {x0 + 3 * dx_width}] exceeds the box")
    if p0 - 3 * dp_width < grid.p_min or p0 + 3 * dp_width > grid.p_max:
        raise TruncationError(f"p support [{p0 - 3 * dp_width}, {p0 + 3 * dp_width}] exceeds the box")

    gx = _gaussian_profile(grid.x, x0, dx_width, period)
    gp = _gaussian_profile(grid.p, p0, dp_width, None)
    gx /= gx.sum() * grid.dx
    gp /= gp.sum() * grid.dp
    return PhaseSpaceState(grid, np.outer(gx, gp), kind=kind, hbar=hbar, t=0.0)


def norm(state: PhaseSpaceState) -> float:
    return float(state.f.sum() * state.grid.cell_area)


def marginal_x(state: PhaseSpaceState) -> np.ndarray:
    return state.f.sum(axis=1) * state.grid.dp


def marginal_p(state: PhaseSpaceState) -> np.ndarray:
    return state.f.sum(axis=0) * state.grid.dx


def _edge_mask(grid: PhaseSpaceGrid, width: int = 1) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    mask[:, :width] = mask[:, -width:] = True
    if not grid.periodic:
        mask[:width, :] = mask[-width:, :] = True
    return mask


def boundary_mass(state: PhaseSpaceState, width: int | None = None, signed: bool = True) -> float:
    """Mass in the outer cells of every bounded axis.

    The default band is ``max(2, n // 64)`` cells wide along each axis. With
    ``signed`` (default) this is ``|int_edge f|``, so zero-mean spectral
    ringing does not count as leaked mass; otherwise ``int_edge |f|``.
    """
    g = state.grid
    if width is None:
        width = max(2, min(g.nx, g.n_p) // 64)
    edge = state.f[_edge_mask(g, width)]
    total = abs(edge.sum()) if signed else np.abs(edge).sum()
    return float(total * g.cell_area)


def moment(state: PhaseSpaceState, i: int, j: int) -> float:
    """``<x^i p^j>``: grid quadrature divided by the norm.

    Emits :class:`TruncationWarning` when at least 1e-3 of the integrand's
    absolute weight sits on the boundary cells.
    """
    if i < 0 or j < 0:
        raise ValueError("moment orders must be non-negative")
    g = state.grid
    integrand = np.outer(g.x ** i, g.p ** j) * state.f
    total = np.abs(integrand).sum()
    if total > 0 and np.abs(integrand[_edge_mask(g)]).sum() >= 1e-3 * total:
        warnings.warn(f"moment({i},{j}) integrand touches the box edge", TruncationWarning,
                      stacklevel=2)
    return float(integrand.sum() / state.f.sum())


def _fourier_upsample(a: np.ndarray, factor: int, axis: int) -> np.ndarray:
    """Trigonometric interpolation of periodic samples onto a ``factor``-times finer grid."""
    n = a.shape[axis]
    big = n * factor
    spec = np.fft.fft(a, axis=axis)
    shape = list(a.shape)
    shape[axis] = big
    out = np.zeros(shape, dtype=complex)
    half = n // 2
    lo = [slice(None)] * a.ndim
    hi = [slice(None)] * a.ndim
    lo[axis] = slice(0, half)
    hi[axis] = slice(n - half + 1, n)
    dst_hi = list(hi)
    dst_hi[axis] = slice(big - half + 1, big)
    out[tuple(lo)] = spec[tuple(lo)]
    out[tuple(dst_hi)] = spec[tuple(hi)]
    # split the Nyquist coefficient symmetrically so real data stays real
    nyq = [slice(None)] * a.ndim
    nyq[axis] = half
    pos = list(nyq)
    neg = list(nyq)
    neg[axis] = big - half
    out[tuple(pos)] = 0.5 * spec[tuple(nyq)]
    out[tuple(neg)] = 0.5 * spec[tuple(nyq)]
    res = np.fft.ifft(out, axis=axis) * factor
    return res if np.iscomplexobj(a) else res.real


def refine_x(state: PhaseSpaceState, factor: int) -> PhaseSpaceState:
    """Spectrally upsample the x-axis by an integer power-of-two factor.

    Exact for distributions band-limited on the original grid; on box grids
    this assumes negligible mass at the edges (checked by the caller).
    """
    if factor == 1:
        return state
    if factor < 1 or not _is_pow2(factor):
        raise ConfigurationError(f"refine factor must be a power of two, got {factor}")
    g = state.grid
    fine = make_grid(g.nx * factor, g.n_p, g.x_min, g.x_max, g.p_min, g.p_max, g.boundary)
    f = _fourier_upsample(state.f, factor, axis=0)
    out = copy.copy(state)
    out.grid = fine
    out.f = np.ascontiguousarray(f)
    return out


def write_snapshot(path, state: PhaseSpaceState) -> None:
    """Binary little-endian snapshot: fixed header then nx*np f64 values, x-major.

    The kind byte carries bit 0 = Wigner, bit 1 = periodic_x.
    """
    g = state.grid
    flags = (1 if state.kind == "wigner" else 0) | (2 if g.periodic else 0)
    header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, g.nx, g.n_p,
                          g.x_min, g.x_max, g.p_min, g.p_max, g.dx, g.dp,
                          flags, state.hbar, state.t)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(state.f, dtype="<f8").tobytes())


def read_snapshot(path) -> PhaseSpaceState:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ConfigurationError(f"{path}: truncated snapshot header")
    (magic, version, nx, n_p, x_min, x_max, p_min, p_max, _dx, _dp,
     flags, hbar, t) = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise ConfigurationError(f"{path}: bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise ConfigurationError(f"{path}: unsupported snapshot version {version}")
    body = data[_HEADER.size:]
    if len(body) != 8 * nx * n_p:
        raise ConfigurationError(f"{path}: payload size does not match {nx}x{n_p}")
    grid = make_grid(nx, n_p, x_min, x_max, p_min, p_max, "periodic_x" if flags & 2 else "box")
    f = np.frombuffer(body, dtype="<f8").reshape(nx, n_p).astype(np.float64)
    state = PhaseSpaceState(grid, np.zeros(grid.shape), kind="wigner" if flags & 1 else "classical",
                            hbar=hbar, t=t)
    return state.evolved(f)


def export_csv(path, state: PhaseSpaceState) -> None:
    """Plot-ready ``x,p,f`` rows."""
    g = state.grid
    X, P = np.meshgrid(g.x, g.p, indexing="ij")
    table = np.column_stack([X.ravel(), P.ravel(), state.f.ravel()])
    np.savetxt(path, table, delimiter=",", header="x,p,f", comments="", fmt="%.17g")
