"""Weyl transform between phase-space distributions and density matrices.

With ``chi(x, theta) = int dp f(x, p) e^{i theta p}`` the density matrix is
``rho(x + y/2, x - y/2) = chi(x, y/hbar)``. On a grid whose theta spacing
satisfies ``hbar * dtheta = 2 r dx`` for an integer ``r`` the displacements
``y_d = hbar * theta_d`` land on the x-lattice, and ``rho`` is sampled exactly
(no interpolation) on the coarse lattice ``X_a = x_min + a h`` with
``h = 2 r dx``: ``rho_ab = chi(x_{r(a+b)}, theta_{a-b})``.

Displacements at or beyond the theta Nyquist index are outside the band of
the grid and are set to zero. The matrix whose eigenvalues are reported is
``rho * h`` so that a trace-one state has eigenvalues summing to one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, IntegrityError, MisuseError
from .phasespace import PhaseSpaceGrid, PhaseSpaceState, _fourier_upsample, make_grid

__all__ = [
    "DensityMatrix",
    "SpectrumReport",
    "Classification",
    "commensurability",
    "to_density_matrix",
    "from_density_matrix",
    "spectrum",
    "purity",
    "gamma",
    "classify",
    "export_spectrum_csv",
    "export_gamma_csv",
    "grid_for_lattice",
]

HERMITIAN_PRECHECK = 1e-8
TYPE_II_NU = 0.05
TYPE_I_NU = 0.005


@dataclass
class DensityMatrix:
    """Position-basis density kernel on the lattice ``X_a = x0 + a*dx``.

    ``rho`` holds kernel values, so ``trace = dx * sum(diag(rho))``. ``grid``
    and ``r`` record the phase-space grid the matrix is tied to, when any.
    """

    rho: np.ndarray
    dx: float
    hbar: float
    source: str = "quantum"
    x0: float = 0.0
    grid: PhaseSpaceGrid | None = None
    r: int | None = None
    t: float = 0.0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)
        if self.rho.ndim != 2 or self.rho.shape[0] != self.rho.shape[1]:
            raise ConfigurationError(f"rho must be square, got shape {self.rho.shape}")
        if self.source not in ("quantum", "weyl_of_classical"):
            raise ConfigurationError(f"source={self.source!r} not recognized")

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def matrix(self) -> np.ndarray:
        """``rho * dx``: the operator matrix in the orthonormal lattice basis."""
        return self.rho * self.dx

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)) * self.dx)

    def hermiticity_error(self) -> float:
        m = self.matrix
        return float(np.abs(m - m.conj().T).max())


@dataclass
class SpectrumReport:
    """Eigenvalues (descending) of a density matrix plus negativity summaries."""

    eigenvalues: np.ndarray
    negative_mass: float
    purity: float
    trace: float
    source: str
    t: float = 0.0
    gamma: float | None = None
    inputs: dict = field(default_factory=dict)

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[-1])


@dataclass
class Classification:
    verdict: str
    nu: list
    nu_max: float
    thresholds: tuple


def commensurability(grid: PhaseSpaceGrid, hbar: float) -> int:
    """Integer ``r`` with ``hbar * dtheta = 2 r dx``.

    Raises
    ------
    ConfigurationError
        When no such integer exists or ``nx`` is not divisible by ``2r``; the
        message names the momentum extent that would make the grid fit.
    """
    extent = grid.p_max - grid.p_min
    ratio = math.pi * hbar / (extent * grid.dx)
    r = round(ratio)
    if r < 1 or abs(ratio - r) > 1e-9 * max(1.0, ratio):
        best = max(1, r)
        need = math.pi * hbar / (best * grid.dx)
        raise ConfigurationError(
            f"grid is not commensurate for the Weyl transform: hbar*dtheta/(2dx) = {ratio:.9g} "
            f"is not an integer; use a momentum extent p_max - p_min = {need:.12g} (r = {best})")
    if grid.nx % (2 * r):
        raise ConfigurationError(f"nx={grid.nx} must be divisible by 2r = {2 * r}")
    return int(r)


def grid_for_lattice(n: int, h: float, hbar: float, x_min: float = 0.0, n_p: int | None = None,
                     boundary: str = "box") -> PhaseSpaceGrid:
    """Smallest commensurate grid (``r = 1``) carrying an ``n``-point lattice of spacing ``h``."""
    nx = 2 * n
    n_p = n_p or 2 * n
    dx = h / 2
    extent = math.pi * hbar / dx
    return make_grid(nx, n_p, x_min, x_min + nx * dx, -extent / 2, extent / 2, boundary)


def _chi_rows(state: PhaseSpaceState, rows: np.ndarray) -> np.ndarray:
    """``chi(x_i, theta_d)`` for the given rows and every signed index ``d`` (FFT order)."""
    g = state.grid
    d = np.fft.fftfreq(g.n_p, 1.0 / g.n_p)
    theta = 2 * math.pi * d / (g.n_p * g.dp)
    chi = np.fft.ifft(state.f[rows], axis=1) * (g.n_p * g.dp)
    chi *= np.exp(1j * theta * g.p_min)[None, :]
    return chi


def to_density_matrix(state: PhaseSpaceState, check: bool = True) -> DensityMatrix:
    """Weyl transform of a distribution onto the commensurate position lattice.

    Raises
    ------
    ConfigurationError
        Incommensurate grid.
    IntegrityError
        Hermiticity deviation at least 1e-8 before symmetrization.
    """
    g = state.grid
    r = commensurability(g, state.hbar)
    n = g.nx // (2 * r)
    h = 2 * r * g.dx
    a = np.arange(n)
    s = a[:, None] + a[None, :]
    d = a[:, None] - a[None, :]
    chi = _chi_rows(state, np.arange(0, 2 * n - 1) * r)
    rho = chi[s, d % g.n_p]
    rho[np.abs(d) >= g.n_p // 2] = 0.0
    dev = float(np.abs(rho - rho.conj().T).max() * h)
    if check and dev >= HERMITIAN_PRECHECK:
        raise IntegrityError(f"Weyl transform not Hermitian before symmetrization ({dev:.3e})")
    rho = 0.5 * (rho + rho.conj().T)
    source = "quantum" if state.kind == "wigner" else "weyl_of_classical"
    return DensityMatrix(rho, h, state.hbar, source, g.x_min, g, r, state.t)


def _interpolation_matrix(n: int, factor: int) -> np.ndarray:
    """Real matrix mapping ``n`` periodic samples to ``n*factor`` trigonometric interpolants."""
    return _fourier_upsample(np.eye(n), factor, axis=0)


def from_density_matrix(dm: DensityMatrix, grid: PhaseSpaceGrid | None = None) -> PhaseSpaceState:
    """Inverse Weyl transform onto ``grid`` (default: the grid the matrix came from).

    The lattice values are reproduced exactly; the off-lattice half of the
    fine ``(x, y)`` samples is filled by trigonometric interpolation of ``rho``.
    The grid must carry the lattice (``h = 2 r dx``) with ``n_p >= 2n``.
    ``int f dx dp`` equals ``trace(rho)`` when ``rho`` has no content at the
    lattice Nyquist frequency (smooth states); the forward transform of the
    result returns ``rho`` in every case.
    """
    grid = grid or dm.grid
    if grid is None:
        grid = grid_for_lattice(dm.n, dm.dx, dm.hbar, dm.x0)
    r = commensurability(grid, dm.hbar)
    n = dm.n
    if grid.nx != 2 * r * n or not math.isclose(2 * r * grid.dx, dm.dx, rel_tol=1e-12):
        raise MisuseError(f"grid (nx={grid.nx}, r={r}) does not carry an {n}-point lattice of spacing {dm.dx}")
    if grid.n_p < 2 * n:
        raise MisuseError(f"n_p={grid.n_p} must be at least 2n = {2 * n} for an exact inverse")
    S = _interpolation_matrix(n, 2 * r)
    fine = S @ dm.rho @ S.T
    nx, n_p = grid.nx, grid.n_p
    i = np.arange(nx)[:, None]
    dd = np.fft.fftfreq(n_p, 1.0 / n_p).astype(int)[None, :]
    plus, minus = i + r * dd, i - r * dd
    ok = (plus >= 0) & (plus < nx) & (minus >= 0) & (minus < nx) & (np.abs(dd) < n_p // 2)
    chi = np.zeros((nx, n_p), dtype=complex)
    chi[ok] = fine[plus[ok], minus[ok]]
    theta = 2 * math.pi * dd / (n_p * grid.dp)
    g = chi * np.exp(-1j * theta * grid.p_min)
    f = np.fft.fft(g, axis=1).real / (n_p * grid.dp)
    state = PhaseSpaceState(grid, np.zeros(grid.shape), kind="wigner", hbar=dm.hbar, t=dm.t)
    return state.evolved(np.ascontiguousarray(f))


def spectrum(dm: DensityMatrix, tol: float = 1e-10) -> SpectrumReport:
    """Full Hermitian eigendecomposition, eigenvalues sorted descending.

    Raises
    ------
    IntegrityError
        Hermiticity deviation above ``tol``.
    """
    err = dm.hermiticity_error()
    if err > tol:
        raise IntegrityError(f"density matrix not Hermitian (deviation {err:.3e})")
    m = dm.matrix
    w = scipy.linalg.eigvalsh(0.5 * (m + m.conj().T))[::-1].copy()
    nu = float(-w[w < 0].sum())
    return SpectrumReport(w, nu, float(np.sum(w**2)), dm.trace, dm.source, dm.t,
                          inputs={"n": dm.n, "dx": dm.dx, "hbar": dm.hbar})


def purity(state: PhaseSpaceState) -> float:
    """``2 pi hbar int f^2 dx dp``."""
    return float(2 * math.pi * state.hbar * (state.f**2).sum() * state.grid.cell_area)


def gamma(state: PhaseSpaceState) -> float:
    """Negativity ``int (|f| - f) dx dp``."""
    f = state.f
    return float((np.abs(f) - f).sum() * state.grid.cell_area)


def classify(reports, type_ii: float = TYPE_II_NU, type_i: float = TYPE_I_NU) -> Classification:
    """Type I / Type II verdict from the negative mass of classical spectra.

    The largest ``nu`` over the supplied reports decides: ``>= type_ii`` gives
    ``"TypeII"``, ``<= type_i`` gives ``"TypeI"``, otherwise ``"indeterminate"``.
    """
    reports = list(reports)
    if not reports:
        raise MisuseError("classify needs at least one spectrum")
    if any(rep.source != "weyl_of_classical" for rep in reports):
        raise MisuseError("classify takes spectra of classically evolved distributions only")
    nus = [rep.negative_mass for rep in reports]
    top = max(nus)
    verdict = "TypeII" if top >= type_ii else "TypeI" if top <= type_i else "indeterminate"
    return Classification(verdict, nus, top, (type_i, type_ii))


def export_spectrum_csv(path, report: SpectrumReport) -> None:
    """Rows ``i,eigenvalue`` (descending order, 17 significant digits)."""
    with open(path, "w") as fh:
        fh.write("i,eigenvalue\n")
        for i, w in enumerate(report.eigenvalues):
            fh.write(f"{i},{w:.17g}\n")


def export_gamma_csv(path, times, values) -> None:
    """Rows ``t,gamma``."""
    with open(path, "w") as fh:
        fh.write("t,gamma\n")
        for t, v in zip(times, values):
            fh.write(f"{t:.17g},{v:.17g}\n")
