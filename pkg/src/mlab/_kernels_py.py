"""Pure-numpy implementations of the phase kernels (same contract as ``_kernels``)."""
import numpy as np


def _unit(phi, nyq_row, nyq_col):
    u = np.exp(1j * phi)
    if nyq_row >= 0:
        u[nyq_row, :] = np.where(np.cos(phi[nyq_row, :]) >= 0.0, 1.0, -1.0)
    if nyq_col >= 0:
        u[:, nyq_col] = np.where(np.cos(phi[:, nyq_col]) >= 0.0, 1.0, -1.0)
    return u


def apply_separable_phase(z, a, b, damp, nyq_row, nyq_col):
    phi = np.einsum("ri,rj->ij", a, b)
    u = _unit(phi, nyq_row, nyq_col)
    if len(damp):
        u *= damp[None, :]
    z *= u


def apply_dense_phase(z, phi, damp, nyq_row, nyq_col):
    u = _unit(np.asarray(phi), nyq_row, nyq_col)
    if len(damp):
        u *= damp[None, :]
    z *= u
