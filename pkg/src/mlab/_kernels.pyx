# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled phase-multiplication kernels for the split-step propagators.

Both kernels multiply a half-spectrum array in place by a unit phase and an
optional per-column damping factor. Entries on the Nyquist row/column get the
nearest real unit ``sign(cos(phi))`` instead of ``exp(i*phi)`` so the inverse
real FFT stays exactly norm-preserving.
"""
from libc.math cimport sin, cos


def apply_separable_phase(double complex[:, ::1] z, const double[:, ::1] a,
                          const double[:, ::1] b, const double[::1] damp,
                          Py_ssize_t nyq_row, Py_ssize_t nyq_col):
    cdef Py_ssize_t n0 = z.shape[0], n1 = z.shape[1], rank = a.shape[0]
    cdef Py_ssize_t i, j, r
    cdef double phi, c, s, re, im
    cdef bint use_damp = damp.shape[0] > 0
    with nogil:
        for i in range(n0):
            for j in range(n1):
                phi = 0.0
                for r in range(rank):
                    phi = phi + a[r, i] * b[r, j]
                if i == nyq_row or j == nyq_col:
                    c = 1.0 if cos(phi) >= 0.0 else -1.0
                    s = 0.0
                else:
                    c = cos(phi)
                    s = sin(phi)
                if use_damp:
                    c = c * damp[j]
                    s = s * damp[j]
                re = z[i, j].real
                im = z[i, j].imag
                z[i, j] = (re * c - im * s) + 1j * (re * s + im * c)


def apply_dense_phase(double complex[:, ::1] z, const double[:, ::1] phi,
                      const double[::1] damp, Py_ssize_t nyq_row, Py_ssize_t nyq_col):
    cdef Py_ssize_t n0 = z.shape[0], n1 = z.shape[1]
    cdef Py_ssize_t i, j
    cdef double c, s, re, im, ph
    cdef bint use_damp = damp.shape[0] > 0
    with nogil:
        for i in range(n0):
            for j in range(n1):
                ph = phi[i, j]
                if i == nyq_row or j == nyq_col:
                    c = 1.0 if cos(ph) >= 0.0 else -1.0
                    s = 0.0
                else:
                    c = cos(ph)
                    s = sin(ph)
                if use_damp:
                    c = c * damp[j]
                    s = s * damp[j]
                re = z[i, j].real
                im = z[i, j].imag
                z[i, j] = (re * c - im * s) + 1j * (re * s + im * c)
