"""Dispatch between the compiled pointwise kernels and pure numpy.

The compiled extension (``_kernels``, built from Cython) fuses the
per-iteration pointwise operations of the solver into single passes.
It is strictly optional: when the extension is absent, or the
environment variable ``CHOQUARD_PURE=1`` is set, the numpy fallbacks
below are used.  Both paths agree to roundoff; ``COMPILED`` records
which one is active so benchmarks and tests can introspect it.
"""

import os

import numpy as np

_kernels = None
if os.environ.get("CHOQUARD_PURE", "") != "1":
    try:
        from . import _kernels  # noqa: F401  (compiled extension)
    except ImportError:
        _kernels = None

COMPILED = _kernels is not None


def _flat(values, dtype):
    arr = np.ascontiguousarray(values, dtype=dtype)
    return arr.reshape(-1), arr.shape


def abs2(values):
    """Pointwise |v|^2 of a complex array, as a real array."""
    if _kernels is not None and values.dtype == np.complex128:
        flat, shape = _flat(values, np.complex128)
        return _kernels.abs2(flat).reshape(shape)
    return values.real ** 2 + values.imag ** 2


def scaled_real_mul(weight, values, c):
    """c * weight * values for a real weight and a complex field."""
    if _kernels is not None and values.dtype == np.complex128 \
            and weight.dtype == np.float64:
        flat_w, _ = _flat(weight, np.float64)
        flat_v, shape = _flat(values, np.complex128)
        return _kernels.scaled_real_mul(flat_w, flat_v, float(c)).reshape(shape)
    return c * weight * values


def weighted_mass(weight, values):
    """sum(weight * values**2) for real arrays."""
    if _kernels is not None and values.dtype == np.float64 \
            and weight.dtype == np.float64:
        flat_w, _ = _flat(weight, np.float64)
        flat_v, _ = _flat(values, np.float64)
        return float(_kernels.weighted_mass(flat_w, flat_v))
    return float(np.sum(weight * values ** 2))
