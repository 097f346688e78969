"""Uniform periodic box in 3D with spectral calculus.

The box is [-L, L)^3 sampled on n points per axis (n even), so all
derivatives and transforms are plain FFT operations.  Fields are stored as
full complex arrays; a ``real`` flag marks fields whose imaginary part is
identically zero so downstream code can take real fast paths.
"""

import os
import struct
from dataclasses import dataclass, field as _dfield

import numpy as np
import scipy.fft

from .errors import ChoquardError, GridMismatchError

_MAGIC = b"CHQF"
_VERSION = 1


def fft_workers():
    """Worker count for internal FFT parallelism (capped by CHQ_THREADS)."""
    cap = os.environ.get("CHQ_THREADS")
    if cap:
        return max(1, int(cap))
    return -1


@dataclass(frozen=True)
class Grid3:
    """Cubic grid: n points per axis on [-L, L), spacing h = 2L/n."""

    n: int
    half_length: float

    def __post_init__(self):
        if self.n % 2 != 0 or self.n < 8:
            raise ValueError(f"n must be even and >= 8, got {self.n}")
        if not self.half_length > 0:
            raise ValueError(f"half_length must be positive, got {self.half_length}")

    @property
    def spacing(self):
        return 2.0 * self.half_length / self.n

    @property
    def cell_volume(self):
        return self.spacing ** 3

    def axis(self):
        """Node coordinates along one axis: x_i = -L + i*h."""
        return -self.half_length + self.spacing * np.arange(self.n)

    def meshgrid(self):
        """Open (broadcastable) coordinate arrays (x, y, z)."""
        a = self.axis()
        return np.meshgrid(a, a, a, indexing="ij", sparse=True)

    def wavenumbers(self):
        """Open (broadcastable) angular wavenumber arrays per axis."""
        k = 2.0 * np.pi * scipy.fft.fftfreq(self.n, d=self.spacing)
        return (
            k.reshape(-1, 1, 1),
            k.reshape(1, -1, 1),
            k.reshape(1, 1, -1),
        )

    def deriv_wavenumbers(self):
        """Wavenumbers with the Nyquist mode zeroed.

        This is the shared derivative convention: the odd derivative of
        the (even) Nyquist mode is taken as zero, which keeps real
        fields exactly real.  Every differential operator in the
        package uses these, so quadratic forms and their strong-form
        operators agree identically on the grid.
        """
        out = []
        for k in self.wavenumbers():
            k = k.copy()
            k.reshape(-1)[self.n // 2] = 0.0
            out.append(k)
        return tuple(out)

    def radius_sq(self, center=(0.0, 0.0, 0.0)):
        x, y, z = self.meshgrid()
        return (x - center[0]) ** 2 + (y - center[1]) ** 2 + (z - center[2]) ** 2


def make_grid(n, L):
    """Build a Grid3; rejects odd n, n < 8, or non-positive L."""
    return Grid3(int(n), float(L))


@dataclass
class ScalarField:
    """Complex samples on a Grid3; ``real`` flags a bitwise-real field."""

    grid: Grid3
    values: np.ndarray
    real: bool = False

    def __post_init__(self):
        n = self.grid.n
        self.values = np.ascontiguousarray(self.values, dtype=np.complex128)
        if self.values.shape != (n, n, n):
            raise ValueError(f"values must have shape {(n, n, n)}, got {self.values.shape}")
        if self.real:
            # enforce the flag invariant bitwise
            self.values = self.values.real.astype(np.complex128)

    @classmethod
    def zeros(cls, grid, real=False):
        return cls(grid, np.zeros((grid.n,) * 3, dtype=np.complex128), real=real)

    @classmethod
    def from_real(cls, grid, values):
        return cls(grid, np.asarray(values, dtype=float).astype(np.complex128), real=True)

    @classmethod
    def from_function(cls, grid, fn, real=False):
        x, y, z = grid.meshgrid()
        vals = np.broadcast_to(fn(x, y, z), (grid.n,) * 3)
        return cls(grid, np.asarray(vals, dtype=np.complex128), real=real)

    def copy(self):
        return ScalarField(self.grid, self.values.copy(), real=self.real)

    def abs(self):
        """Pointwise |u| as a real field."""
        return ScalarField.from_real(self.grid, np.abs(self.values))

    def abs2(self):
        """Pointwise |u|^2 as a real field."""
        from ._accel import abs2
        return ScalarField.from_real(self.grid, abs2(self.values))

    def __add__(self, other):
        check_same_grid(self, other)
        return ScalarField(self.grid, self.values + other.values,
                           real=self.real and other.real)

    def __sub__(self, other):
        check_same_grid(self, other)
        return ScalarField(self.grid, self.values - other.values,
                           real=self.real and other.real)

    def __mul__(self, c):
        if isinstance(c, ScalarField):
            check_same_grid(self, c)
            return ScalarField(self.grid, self.values * c.values,
                               real=self.real and c.real)
        keep_real = self.real and np.isrealobj(np.asarray(c))
        return ScalarField(self.grid, self.values * c, real=keep_real)

    __rmul__ = __mul__


@dataclass
class VectorField:
    """Three scalar components on a shared grid."""

    components: tuple

    def __post_init__(self):
        cs = tuple(self.components)
        if len(cs) != 3:
            raise ValueError("a VectorField has exactly 3 components")
        g = cs[0].grid
        for c in cs[1:]:
            if c.grid != g:
                raise GridMismatchError("vector components on different grids")
        self.components = cs

    @property
    def grid(self):
        return self.components[0].grid

    @classmethod
    def zeros(cls, grid, real=False):
        return cls(tuple(ScalarField.zeros(grid, real=real) for _ in range(3)))

    def abs2(self):
        """Pointwise |v|^2 = sum of squared component moduli (real field)."""
        out = np.zeros((self.grid.n,) * 3)
        for c in self.components:
            out += c.values.real ** 2 + c.values.imag ** 2
        return ScalarField.from_real(self.grid, out)


def check_same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError(f"grids differ: {g} vs {f.grid}")


def integrate(f):
    """h^3 * sum of samples (trapezoid rule on the periodic box).

    np.sum uses pairwise reduction, so the result does not depend on any
    internal chunking of the summation.
    """
    s = np.sum(f.values.real) if f.real else np.sum(f.values)
    return f.grid.cell_volume * s


def norm_l2(f):
    """L2 norm sqrt(integrate(|f|^2))."""
    v = f.values
    return float(np.sqrt(f.grid.cell_volume * np.sum(v.real ** 2 + v.imag ** 2)))


def forward_transform(f):
    """Unitary DFT of the samples (Parseval holds with no extra factor)."""
    spec = scipy.fft.fftn(f.values, norm="ortho", workers=fft_workers())
    return ScalarField(f.grid, spec)


def inverse_transform(f):
    spec = scipy.fft.ifftn(f.values, norm="ortho", workers=fft_workers())
    return ScalarField(f.grid, spec)


def gradient(f):
    """Spectral gradient; exact for band-limited fields.

    The Nyquist mode derivative is zeroed (odd derivative of an even mode),
    which keeps real fields exactly real.
    """
    spec = scipy.fft.fftn(f.values, workers=fft_workers())
    comps = []
    for k in f.grid.deriv_wavenumbers():
        d = scipy.fft.ifftn(1j * k * spec, workers=fft_workers())
        if f.real:
            comps.append(ScalarField.from_real(f.grid, d.real))
        else:
            comps.append(ScalarField(f.grid, d))
    return VectorField(tuple(comps))


def laplacian(f):
    """Spectral Laplacian (gradient convention: Nyquist derivative zero)."""
    spec = scipy.fft.fftn(f.values, workers=fft_workers())
    kx, ky, kz = f.grid.deriv_wavenumbers()
    k2 = kx ** 2 + ky ** 2 + kz ** 2
    out = scipy.fft.ifftn(-k2 * spec, workers=fft_workers())
    if f.real:
        return ScalarField.from_real(f.grid, out.real)
    return ScalarField(f.grid, out)


def boundary_max(f):
    """max |f| over the six boundary faces (box-size adequacy monitor)."""
    v = np.abs(f.values)
    return float(max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max(),
                     v[:, :, 0].max(), v[:, :, -1].max()))


# --- flat binary serialization ------------------------------------------
#
# 32-byte header: magic "CHQF" | uint32 version | uint32 n | uint32 real
# flag | float64 L | 8 reserved bytes; then n^3 interleaved (re, im)
# doubles in row-major order.  Everything little-endian.

_HEADER = struct.Struct("<4sIIId8x")
assert _HEADER.size == 32


def save_field(f, path):
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, f.grid.n, int(f.real),
                              f.grid.half_length))
        interleaved = np.empty((f.grid.n ** 3, 2))
        flat = f.values.reshape(-1)
        interleaved[:, 0] = flat.real
        interleaved[:, 1] = flat.imag
        interleaved.astype("<f8").tofile(fh)


def load_field(path):
    with open(path, "rb") as fh:
        magic, version, n, real_flag, L = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC:
            raise ChoquardError(f"not a field file: bad magic {magic!r}")
        if version != _VERSION:
            raise ChoquardError(f"unsupported field file version {version}")
        raw = np.fromfile(fh, dtype="<f8", count=2 * n ** 3).reshape(-1, 2)
    values = (raw[:, 0] + 1j * raw[:, 1]).reshape(n, n, n)
    return ScalarField(Grid3(n, L), values, real=bool(real_flag))
