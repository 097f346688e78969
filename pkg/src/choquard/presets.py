"""Built-in magnetic and electric potential families.

The electric presets keep V strictly positive and bounded on the box;
the ring-well realizes the standard benchmark geometry: a circular
valley of depth V0 at planar radius r0, quadratic in both the planar
distance to the ring and the axial coordinate, so the minimizing set of
(#Gx) V^{3/2} under an even-order rotation group is the ring itself.
"""

import numpy as np

from .errors import ConfigError
from .field import ScalarField, VectorField


def vector_potential(name, grid, strength=1.0):
    """Magnetic preset: "zero" or "standard".

    "standard" is the planar rotation field strength * (-x2, x1, 0),
    equivariant under every rotation about the third axis and
    divergence-free.
    """
    if name == "zero":
        return VectorField.zeros(grid, real=True)
    if name == "standard":
        x, y, z = grid.meshgrid()
        zero = np.zeros((grid.n,) * 3)
        return VectorField((
            ScalarField.from_real(grid, -strength * y + zero),
            ScalarField.from_real(grid, strength * x + zero),
            ScalarField.zeros(grid, real=True),
        ))
    raise ConfigError(f"unknown magnetic preset {name!r}")


def electric_potential(name, grid, v0=1.0, a=1.0, b=1.0, r0=1.0):
    """Electric preset: "constant" or "ring-well".

    ring-well: V(z, t) = v0 + a (|z| - r0)^2 + b t^2 with z the planar
    coordinates and t the axial one.  With the default parameters the
    minimum V = v0 is attained exactly on the ring |z| = r0, t = 0, and
    for a rotation group of order m the orbit-weighted minimum is
    m * v0^{3/2} there.
    """
    if v0 <= 0:
        raise ConfigError("v0 must be positive")
    if name == "constant":
        return ScalarField.from_real(grid, np.full((grid.n,) * 3, v0))
    if name == "ring-well":
        x, y, t = grid.meshgrid()
        planar = np.sqrt(x ** 2 + y ** 2)
        vals = v0 + a * (planar - r0) ** 2 + b * t ** 2
        return ScalarField.from_real(grid, np.broadcast_to(
            vals, (grid.n,) * 3).copy())
    raise ConfigError(f"unknown electric preset {name!r}")
