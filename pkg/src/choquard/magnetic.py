"""Magnetic energy functional, its first variation and Nehari geometry.

Implements the quadratic form  ||u||^2 = int(|e grad u + i A u|^2 + V|u|^2),
the functional  J(u) = 1/2 ||u||^2 - D(u)/(4 e^2)  with e the semiclassical
parameter, the strong-form Euler-Lagrange residual, the radial projection
onto the Nehari constraint  e^2 ||u||^2 = D(u), and the pointwise
diamagnetic comparison  e |grad|u|| <= |e grad u + i A u|.

The norm is always assembled from the covariant gradient itself (never
from the expanded second-order operator), so it is manifestly nonnegative;
the expanded operator is used only for the residual.
"""

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .coulomb import hartree_energy, hartree_potential
from .field import (ScalarField, VectorField, check_same_grid, fft_workers,
                    gradient, integrate, make_grid)


@dataclass
class Potentials:
    """Magnetic potential A, electric potential V > 0, and epsilon."""

    A: VectorField
    V: ScalarField
    epsilon: float

    def __post_init__(self):
        check_same_grid(self.A.components[0], self.V)
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        vmin = self.V.values.real.min()
        if not vmin > 0:
            raise ValueError(f"V must be positive everywhere (min {vmin})")
        if not np.isfinite(self.V.values.real.max()):
            raise ValueError("V must be bounded")

    @property
    def grid(self):
        return self.V.grid

    @property
    def magnetic(self):
        return any(np.any(c.values != 0) for c in self.A.components)


@dataclass
class EnergyBreakdown:
    kinetic_magnetic: float  # int |e grad u + iAu|^2
    potential: float         # int V |u|^2
    hartree: float           # D(u)
    total: float             # J value

    @property
    def norm_sq(self):
        return self.kinetic_magnetic + self.potential


def covariant_gradient(u, p):
    """e * grad(u) + i * A * u, componentwise."""
    check_same_grid(u, p.V)
    g = gradient(u)
    comps = []
    for gc, ac in zip(g.components, p.A.components):
        vals = p.epsilon * gc.values + 1j * ac.values * u.values
        comps.append(ScalarField(u.grid, vals))
    return VectorField(tuple(comps))


def norm_sq(u, p):
    """||u||^2_{e,A,V}, assembled from the covariant gradient."""
    kin = integrate(covariant_gradient(u, p).abs2()).real
    pot = integrate(p.V * u.abs2()).real
    return kin + pot


def inner(u, v, p):
    """Re int (grad_{e,A}u . conj(grad_{e,A}v) + V u conj(v))."""
    check_same_grid(u, v)
    gu = covariant_gradient(u, p)
    gv = covariant_gradient(v, p)
    acc = np.zeros((), dtype=complex)
    for cu, cv in zip(gu.components, gv.components):
        acc += np.sum(cu.values * np.conj(cv.values))
    acc += np.sum(p.V.values.real * u.values * np.conj(v.values))
    return float(u.grid.cell_volume * acc.real)


def energy(u, p, kernel):
    """Energy breakdown of J(u) = 1/2 ||u||^2 - D(u)/(4 e^2)."""
    kin = integrate(covariant_gradient(u, p).abs2()).real
    pot = integrate(p.V * u.abs2()).real
    har = hartree_energy(u, kernel)
    total = 0.5 * (kin + pot) - har / (4.0 * p.epsilon ** 2)
    return EnergyBreakdown(kin, pot, har, total)


def euler_lagrange_residual(u, p, kernel):
    """Strong-form residual of the critical point equation.

    (-e i grad + A)^2 u + V u - e^{-2} (1/|x| * |u|^2) u, with the squared
    operator expanded spectrally as
    -e^2 Lap u - 2 e i A.grad u - e i (div A) u + |A|^2 u.
    The L^2 pairing of this residual with any v equals the Gateaux
    derivative J'(u)v.
    """
    check_same_grid(u, p.V)
    eps = p.epsilon
    spec = scipy.fft.fftn(u.values, workers=fft_workers())
    kx, ky, kz = u.grid.deriv_wavenumbers()
    k2 = kx ** 2 + ky ** 2 + kz ** 2
    lap = scipy.fft.ifftn(-k2 * spec, workers=fft_workers())

    res = -eps ** 2 * lap + p.V.values.real * u.values
    if p.magnetic:
        gu = gradient(u)
        a_dot_grad = sum(ac.values * gc.values
                         for ac, gc in zip(p.A.components, gu.components))
        div_a = sum(gradient(c).components[i].values
                    for i, c in enumerate(p.A.components))
        abs_a2 = sum(c.values.real ** 2 + c.values.imag ** 2
                     for c in p.A.components)
        res = res - 2j * eps * a_dot_grad - 1j * eps * div_a * u.values \
            + abs_a2 * u.values
    pot = hartree_potential(u.abs2(), kernel)
    res = res - pot.values.real * u.values / eps ** 2
    return ScalarField(u.grid, res, real=u.real and not p.magnetic)


def nehari_project(u, p, kernel):
    """Radial projection (e ||u|| / sqrt(D(u))) u onto the Nehari set."""
    d = hartree_energy(u, kernel)
    if d < 1e-300:
        raise ValueError("cannot project: D(u) vanishes (u == 0 or underflow)")
    scale = p.epsilon * np.sqrt(norm_sq(u, p)) / np.sqrt(d)
    return u * scale


def nehari_residual(u, p, kernel):
    """Relative violation |e^2 ||u||^2 - D(u)| / D(u)."""
    d = hartree_energy(u, kernel)
    if d == 0.0:
        return np.inf
    return abs(p.epsilon ** 2 * norm_sq(u, p) - d) / d


def projected_energy(u, p, kernel):
    """J(pi(u)) via the closed form e^2 ||u||^4 / (4 D(u))."""
    d = hartree_energy(u, kernel)
    return p.epsilon ** 2 * norm_sq(u, p) ** 2 / (4.0 * d)


def diamagnetic_check(u, p, tol_coeff=4.0):
    """Count nodes where e|grad|u|| exceeds |e grad u + iAu| beyond tol_h.

    tol_h = tol_coeff * h * max|A| * max|u|: the inequality is pointwise
    a.e. in the continuum, but discrete gradients of |u| are noisy near
    zeros of u, where |u| is only Lipschitz.
    """
    eps = p.epsilon
    lhs = eps * np.sqrt(gradient(u.abs()).abs2().values.real)
    rhs = np.sqrt(covariant_gradient(u, p).abs2().values.real)
    amax = max(np.abs(c.values).max() for c in p.A.components)
    tol_h = tol_coeff * u.grid.spacing * max(amax, eps) * np.abs(u.values).max()
    gap = lhs - rhs
    violations = int(np.count_nonzero(gap > tol_h))
    return violations, float(gap.max(initial=0.0))


def rescale_identity_check(u, p, kernel_factory=None):
    """Both sides of  e^{-3} J_{e,A,V}(u) = J_{1,A_e,V_e}(u_e).

    u_e(x) = u(e x) lives on the grid with half-length L/e and the same
    node count, where it has exactly the original samples; A_e, V_e are
    resampled the same way, so the check costs one extra kernel build.
    """
    from .coulomb import CoulombKernel

    eps = p.epsilon
    lhs_kernel = CoulombKernel.build(u.grid) if kernel_factory is None \
        else kernel_factory(u.grid)
    lhs = energy(u, p, lhs_kernel).total / eps ** 3

    wide = make_grid(u.grid.n, u.grid.half_length / eps)
    u_e = ScalarField(wide, u.values.copy(), real=u.real)
    a_e = VectorField(tuple(ScalarField(wide, c.values.copy(), real=c.real)
                            for c in p.A.components))
    v_e = ScalarField(wide, p.V.values.copy(), real=True)
    p_e = Potentials(a_e, v_e, 1.0)
    rhs_kernel = CoulombKernel.build(wide) if kernel_factory is None \
        else kernel_factory(wide)
    rhs = energy(u_e, p_e, rhs_kernel).total
    return float(lhs), float(rhs)
