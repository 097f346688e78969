# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Fused array kernels for the solver's per-iteration pointwise work.

Each routine makes a single pass over flat contiguous buffers, avoiding
the intermediate temporaries of the equivalent numpy expressions.  The
pure-numpy implementations in ``_accel`` are the reference; these must
agree to roundoff.
"""

import numpy as np


def abs2(const double complex[::1] v):
    """|v|^2 elementwise, one pass, real output."""
    cdef Py_ssize_t i, n = v.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = v[i].real * v[i].real + v[i].imag * v[i].imag
    return out


def scaled_real_mul(const double[::1] w, const double complex[::1] v,
                    double c):
    """c * w * v for a real weight and complex field, one pass."""
    cdef Py_ssize_t i, n = v.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef double s
    for i in range(n):
        s = c * w[i]
        o[i] = s * v[i]
    return out


def weighted_mass(const double[::1] w, const double[::1] v):
    """sum_i w_i v_i^2 in one pass."""
    cdef Py_ssize_t i, n = v.shape[0]
    cdef double acc = 0.0
    for i in range(n):
        acc += w[i] * v[i] * v[i]
    return acc
