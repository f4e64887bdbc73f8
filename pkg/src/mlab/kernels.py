"""Backend selection for the hot phase kernels.

The compiled extension ``mlab._kernels`` is used when it was built; otherwise
(or when ``MLAB_PURE_PYTHON=1``) the numpy implementation in
``mlab._kernels_py`` is used. Both share one contract, wrapped here with
argument normalization.
"""
import os

import numpy as np

from . import _kernels_py

_EMPTY = np.zeros(0)

if os.environ.get("MLAB_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def _impl(backend):
    if backend is None:
        backend = BACKEND
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled
    return _kernels_py


def apply_separable_phase(z, a, b, damp=None, nyq_row=-1, nyq_col=-1, backend=None):
    """In place: ``z[i,j] *= damp[j] * exp(1j * sum_r a[r,i] * b[r,j])``.

    Nyquist row ``nyq_row`` and column ``nyq_col`` (``-1`` for none) receive
    ``sign(cos(phi))`` instead of the complex phase.
    """
    a = np.ascontiguousarray(np.atleast_2d(a), dtype=float)
    b = np.ascontiguousarray(np.atleast_2d(b), dtype=float)
    damp = _EMPTY if damp is None else np.ascontiguousarray(damp, dtype=float)
    _impl(backend).apply_separable_phase(z, a, b, damp, int(nyq_row), int(nyq_col))
    return z


def apply_dense_phase(z, phi, damp=None, nyq_row=-1, nyq_col=-1, backend=None):
    """In place: ``z *= damp[None, :] * exp(1j * phi)`` with the same Nyquist rule."""
    phi = np.ascontiguousarray(phi, dtype=float)
    damp = _EMPTY if damp is None else np.ascontiguousarray(damp, dtype=float)
    _impl(backend).apply_dense_phase(z, phi, damp, int(nyq_row), int(nyq_col))
    return z
