"""Cutoff bumps, phase-decorated translates, and the symmetric entrance map.

The entrance map places a compactly supported, Nehari-normalized copy of
the limit profile at every point of a group orbit, twisted by the sector
character and by a local magnetic phase:

    psi(x) = sum_{g xi in G xi} tau(g) v((x - g xi)/eps) e^{-i A(g xi).(x - g xi)/eps}

where v is the limit profile multiplied by a smooth radial cutoff and
rescaled back onto the Nehari set of the limit functional.  The cutoff
dilation defaults to sqrt(eps) (support radius eps^{-1/2} in rescaled
variables) and is exposed as a knob: slower dilations trade support size
for a much smaller energy defect at desk-scale eps.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import ChoquardError
from .field import ScalarField, fft_workers
from .groundstate import _RadialWorkspace, solve_limit
from .magnetic import projected_energy
from .symmetry import orbit_info, orbit_points


@dataclass(frozen=True)
class EntranceSpec:
    """Concentration site xi, scale eps, sector, and lam = V(xi)."""

    xi: tuple
    epsilon: float
    sector: object
    lam: float

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.lam <= 0:
            raise ValueError("lam must be positive")


def smooth_cutoff(s):
    """C-infinity radial plateau: 1 for s <= 1/2, 0 for s >= 1.

    Built from exp(-1/x) transitions; any admissible smooth cutoff works,
    this one is fixed for reproducibility.
    """
    s = np.asarray(s, dtype=float)

    def f(x):
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = np.exp(-1.0 / x[pos])
        return out

    a = f(2.0 - 2.0 * s)
    b = f(2.0 * s - 1.0)
    return a / (a + b)


def cutoff_dilation(epsilon, exponent=0.5, coefficient=1.0):
    """Cutoff dilation sigma(eps) = coefficient * eps^exponent.

    The bump support radius in rescaled variables is 1/sigma; the default
    exponent 1/2 reproduces the sqrt(eps) dilation of the construction,
    smaller exponents shrink the energy defect at moderate eps.
    """
    if exponent <= 0 or coefficient <= 0:
        raise ValueError("cutoff dilation parameters must be positive")
    return coefficient * epsilon ** exponent


@dataclass
class CutoffProfile:
    """Radial samples of the normalized cutoff bump v (rescaled variables)."""

    base: object          # the underlying RadialProfile
    sigma: float          # cutoff dilation
    values: np.ndarray    # v on base.mesh()
    norm_sq: float        # ||v||_lam^2 (radial quadrature)
    hartree: float        # D(v)
    energy: float         # J_lam(v) = ||v||^4 / (4 D) on the Nehari set

    @property
    def support_radius(self):
        """v vanishes identically beyond 1/sigma."""
        return 1.0 / self.sigma

    def __call__(self, r):
        """Cubic-interpolated samples, exactly zero beyond the support."""
        from scipy.interpolate import CubicSpline

        mesh = self.base.mesh()
        spline = CubicSpline(mesh, self.values,
                             bc_type=((1, 0.0), (1, 0.0)))
        r = np.asarray(r, dtype=float)
        out = spline(np.clip(r, 0.0, mesh[-1]))
        return np.where(r >= self.support_radius, 0.0, np.maximum(out, 0.0))


def cutoff_profile(p, sigma):
    """Cut the limit profile at dilation sigma and renormalize onto Nehari.

    Returns a CutoffProfile holding v = c * rho(sigma r) * omega with
    c = ||rho_sigma omega||_lam / sqrt(D(rho_sigma omega)), so that
    ||v||_lam^2 = D(v) exactly in the radial quadrature.
    """
    if 1.0 / sigma > p.r_max:
        raise ChoquardError(
            f"cutoff support 1/sigma = {1.0 / sigma:g} exceeds the profile "
            f"radius {p.r_max:g}")
    ws = _RadialWorkspace(p.lam, p.nr, p.r_max)
    cut = smooth_cutoff(sigma * ws.r) * p.values
    w = ws.r * cut
    nsq = ws.norm_sq(w)
    d, _ = ws.hartree(w)
    if d <= 0:
        raise ChoquardError("cutoff annihilated the profile")
    c = math.sqrt(nsq / d)
    energy = 0.25 * nsq ** 2 / d
    return CutoffProfile(p, sigma, c * cut, c ** 2 * nsq, c ** 4 * d, energy)


def cutoff_bump(p, epsilon, grid, scale=None):
    """The normalized cutoff bump sampled at |x| on a 3D grid.

    ``scale`` is the cutoff dilation; default sqrt(epsilon).  The output
    is supported in |x| <= 1/scale and sits on the lam-Nehari set of the
    limit functional within radial-quadrature accuracy.
    """
    sigma = math.sqrt(epsilon) if scale is None else scale
    prof = cutoff_profile(p, sigma)
    if prof.support_radius > math.sqrt(3.0) * grid.half_length:
        raise ChoquardError("cutoff support exceeds the grid")
    dist = np.sqrt(grid.radius_sq())
    return ScalarField.from_real(grid, prof(dist))


def _point_eval_vector(A, point):
    """Trigonometric interpolation of each component of A at one point.

    Orbit points rarely land on nodes; the stored samples define a unique
    band-limited interpolant, evaluated here by separable phase sums.
    """
    grid = A.grid
    k = 2.0 * np.pi * scipy.fft.fftfreq(grid.n, d=grid.spacing)
    phases = [np.exp(1j * k * (point[ax] + grid.half_length))
              for ax in range(3)]
    out = []
    for comp in A.components:
        spec = scipy.fft.fftn(comp.values, workers=fft_workers()) / grid.n ** 3
        val = np.einsum("ijk,i,j,k->", spec, *phases)
        out.append(val.real if comp.real else val)
    return np.array(out)


def _orbit_of(spec, grid):
    info = orbit_info(np.asarray(spec.xi, float), spec.sector,
                      grid.spacing / 2.0)
    if not info.isotropy_in_kernel:
        raise ChoquardError(
            "xi has isotropy not contained in the character kernel; "
            "the entrance map is undefined there")
    if info.cardinality == 1:
        return [np.asarray(spec.xi, float)]
    return orbit_points(np.asarray(spec.xi, float), spec.sector)


def entrance(spec, A, grid, profile=None, scale=None):
    """The symmetric multi-bump entrance map on a 3D grid.

    Parameters
    ----------
    spec : EntranceSpec
    A : VectorField
        Magnetic potential, evaluated at orbit points for the local phase.
    grid : Grid3
    profile : RadialProfile, optional
        Limit profile at frequency spec.lam; solved on demand if omitted.
    scale : float, optional
        Cutoff dilation, default sqrt(spec.epsilon).

    Notes
    -----
    Bump supports (radius eps/scale in physical variables) must be
    pairwise disjoint with a 10% margin and must fit inside the box;
    both are hard errors, since overlapping bumps break the additivity
    this construction exists to exhibit.
    """
    eps = spec.epsilon
    sigma = math.sqrt(eps) if scale is None else scale
    if profile is None:
        profile = solve_limit(spec.lam)
    prof = cutoff_profile(profile, sigma)
    radius = eps * prof.support_radius

    pts = _orbit_of(spec, grid)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            dist = float(np.linalg.norm(pts[i] - pts[j]))
            if dist < 2.2 * radius:
                raise ChoquardError(
                    f"bump supports overlap: orbit distance {dist:g} < "
                    f"2.2 x radius {radius:g}")
    reach = max(float(np.abs(p_).max()) for p_ in pts) + radius
    if reach > grid.half_length:
        raise ChoquardError(
            f"bump support leaves the box: reach {reach:g} > "
            f"L = {grid.half_length:g}")

    x, y, z = grid.meshgrid()
    total = np.zeros((grid.n,) * 3, dtype=complex)
    magnetic = any(np.any(c.values != 0) for c in A.components)
    for k, pt in enumerate(pts):
        dx, dy, dz = x - pt[0], y - pt[1], z - pt[2]
        dist = np.sqrt(dx ** 2 + dy ** 2 + dz ** 2)
        bump = prof(dist / eps)
        term = spec.sector.phase(k) * bump
        if magnetic:
            a_pt = _point_eval_vector(A, pt)
            phase = np.exp(-1j * (a_pt[0] * dx + a_pt[1] * dy
                                  + a_pt[2] * dz) / eps)
            term = term * phase
        total += term
    return ScalarField(grid, total,
                       real=bool(np.abs(total.imag).max() == 0.0))


def entrance_energy(spec, potentials, kernel, profile=None, scale=None):
    """Scaled Nehari-projected energy eps^{-3} J(pi(psi)) of the entrance map.

    Sweeping eps toward zero drives this toward ell_{G,V} E_1.
    """
    psi = entrance(spec, potentials.A, potentials.grid,
                   profile=profile, scale=scale)
    return projected_energy(psi, potentials, kernel) / spec.epsilon ** 3
