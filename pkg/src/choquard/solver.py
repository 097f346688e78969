"""Constrained minimization of the magnetic energy on the Nehari manifold.

The scheme is projected gradient descent in the problem's own metric
(the quadratic form ||.||_{eps,A,V}), with Barzilai-Borwein steps,
backtracking on the energy, and retraction = symmetrize followed by the
radial Nehari projection.  Each iteration costs one nonlinear-term
convolution and one metric solve:

    w   = (1/|x| * |u|^2) u          (shared with the retraction)
    q   = M^{-1} w                   (preconditioned CG)
    grad J     = u - eps^{-2} q      (metric gradient of the energy)
    grad g     = 2 eps^2 u - 4 q     (metric gradient of the constraint)

since M u = u holds trivially in the metric.  Tangent projection and all
norms reduce to L2 pairings of strong-form gradients with these metric
vectors, so no further solves are needed.
"""

import math
from dataclasses import dataclass, field as _dfield

import numpy as np
import scipy.fft

from ._accel import scaled_real_mul
from .coulomb import hartree_potential
from .errors import ChoquardError, ConvergenceError
from .field import ScalarField, fft_workers, norm_l2
from .golden import E1_GOLDEN
from .groundstate import solve_limit
from .magnetic import norm_sq
from .symmetry import symmetrize


@dataclass
class SolveOptions:
    """Stopping and stepping controls for minimize."""

    tol_grad: float = 1e-6     # stop when eps^{-3} ||grad_N J||^2 < tol_grad
    max_iter: int = 400
    step_rule: str = "adaptive-bb"   # or "fixed"
    fixed_step: float = 0.5
    cg_tol: float = 1e-6
    cg_max_iter: int = 400
    sweep: tuple = ()

    def __post_init__(self):
        if self.tol_grad <= 0:
            raise ValueError("tol_grad must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.step_rule not in ("adaptive-bb", "fixed"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")


@dataclass
class SolveResult:
    """Converged (or best-effort) critical point with its diagnostics."""

    u: ScalarField
    energy_scaled: float       # eps^{-3} J(u)
    nehari_residual: float
    grad_norm_scaled: float    # eps^{-3} ||grad_N J||^2
    hartree_window: float      # (1/4) int (1/|x| * |u|^2) |u|^2
    sector: object
    epsilon: float
    iterations: int
    converged: bool
    orbit: object = None
    flags: dict = _dfield(default_factory=dict)


class _MetricWorkspace:
    """Applies and inverts the metric operator M of the quadratic form.

    M u = -eps^2 Lap u - 2 eps i A.grad u - eps i (div A) u + |A|^2 u + V u,
    so that Re int (M u) conj(v) equals the ||.||_{eps,A,V} inner product.
    """

    def __init__(self, p):
        self.p = p
        grid = p.grid
        kx, ky, kz = grid.deriv_wavenumbers()
        self.k2 = (kx ** 2 + ky ** 2 + kz ** 2)
        self.kvecs = (kx, ky, kz)
        self.v = p.V.values.real
        eps = p.epsilon
        self.precond_mult = 1.0 / (eps ** 2 * self.k2 + float(self.v.mean()))
        self.magnetic = p.magnetic
        if self.magnetic:
            from .field import gradient
            self.a = [c.values for c in p.A.components]
            div = np.zeros_like(self.a[0])
            for ax, comp in enumerate(p.A.components):
                div = div + gradient(comp).components[ax].values
            self.div_a = div
            self.abs_a2 = sum(c.real ** 2 + c.imag ** 2 for c in self.a)

    def apply(self, values):
        eps = self.p.epsilon
        spec = scipy.fft.fftn(values, workers=fft_workers())
        out = scipy.fft.ifftn(eps ** 2 * self.k2 * spec, workers=fft_workers())
        out += self.v * values
        if self.magnetic:
            grads = [scipy.fft.ifftn(1j * k * spec, workers=fft_workers())
                     for k in self.kvecs]
            a_grad = sum(a * g for a, g in zip(self.a, grads))
            out += (-2j * eps) * a_grad
            out += (-1j * eps) * self.div_a * values
            out += self.abs_a2 * values
        return out

    def precondition(self, values):
        spec = scipy.fft.fftn(values, workers=fft_workers())
        return scipy.fft.ifftn(spec * self.precond_mult, workers=fft_workers())

    def solve(self, rhs, tol, max_iter, x0=None):
        """Preconditioned CG for M x = rhs (M Hermitian positive definite)."""
        x = np.zeros_like(rhs) if x0 is None else x0.copy()
        r = rhs - self.apply(x) if x0 is not None else rhs.copy()
        z = self.precondition(r)
        d = z.copy()
        rz = np.vdot(r, z).real
        rhs_norm = math.sqrt(np.vdot(rhs, rhs).real)
        if rhs_norm == 0.0:
            return x
        for _ in range(max_iter):
            md = self.apply(d)
            alpha = rz / np.vdot(d, md).real
            x += alpha * d
            r -= alpha * md
            if math.sqrt(np.vdot(r, r).real) <= tol * rhs_norm:
                break
            z = self.precondition(r)
            rz_new = np.vdot(r, z).real
            d = z + (rz_new / rz) * d
            rz = rz_new
        return x


def _l2_pair(a, b, cell_volume):
    """Re int a conj(b) h^3 on raw arrays."""
    return float(cell_volume * np.vdot(b, a).real)


class _NehariState:
    """One iterate on the Nehari manifold with its shared intermediates."""

    def __init__(self, u, p, kernel):
        self.p = p
        self.kernel = kernel
        rho = u.abs2()
        pot = hartree_potential(rho, kernel).values.real
        d = float(u.grid.cell_volume * np.sum(rho.values.real * pot))
        if d < 1e-300:
            raise ChoquardError("field vanished during the solve")
        nsq = norm_sq(u, p)
        c = p.epsilon * math.sqrt(nsq) / math.sqrt(d)
        self.u = u * c
        # quantities for the scaled iterate: ||cu||^2 = c^2 nsq,
        # D(cu) = c^4 d, w_nl(cu) = c^3 pot u = c^2 pot (cu)
        self.nsq = c ** 2 * nsq
        self.d = c ** 4 * d
        self.w_nl = scaled_real_mul(pot, self.u.values, c ** 2)
        self.energy = 0.25 * self.nsq   # J on the Nehari set

    def nehari_residual(self):
        return abs(self.p.epsilon ** 2 * self.nsq - self.d) / self.d


def _tangent_direction(state, ws, opts, q0_prev=None):
    """Metric tangent gradient and its squared metric norm.

    Returns (tangent values, ||grad_N J||^2, q0) with q0 = M^{-1} w_nl
    reusable as the next CG warm start.
    """
    p = state.p
    eps = p.epsilon
    u_vals = state.u.values
    h3 = state.u.grid.cell_volume

    q0 = ws.solve(state.w_nl, opts.cg_tol, opts.cg_max_iter, x0=q0_prev)
    grad_j = u_vals - q0 / eps ** 2
    grad_g = 2.0 * eps ** 2 * u_vals - 4.0 * q0

    # strong-form (L2) gradients pair with metric vectors to give metric
    # inner products: <M^{-1}a, w>_M = Re int a conj(w)
    mu = ws.apply(u_vals)
    a_j = mu - state.w_nl / eps ** 2          # J'(u)
    a_g = 2.0 * eps ** 2 * mu - 4.0 * state.w_nl   # g'(u)

    jg = _l2_pair(a_j, grad_g, h3)
    gg = _l2_pair(a_g, grad_g, h3)
    jj = _l2_pair(a_j, grad_j, h3)
    beta = jg / gg
    tangent = grad_j - beta * grad_g
    tsq = max(jj - 2.0 * beta * jg + beta ** 2 * gg, 0.0)
    return tangent, tsq, q0


def _retract(values, p, s, kernel):
    u = symmetrize(ScalarField(p.grid, values), s)
    if norm_l2(u) < 1e-300:
        raise ChoquardError("symmetrization annihilated the iterate")
    return _NehariState(u, p, kernel)


def minimize(start, p, s, kernel, opts=None):
    """Minimize J over the tau-equivariant Nehari manifold from ``start``.

    Returns a SolveResult; an exhausted iteration budget returns the best
    iterate with ``converged=False`` rather than raising.  A start that
    the sector projector annihilates (e.g. a radial start in a twisted
    sector) is a hard error.
    """
    opts = opts or SolveOptions()
    if norm_l2(start) == 0.0:
        raise ChoquardError("start field is zero")
    sym = symmetrize(start, s)
    if norm_l2(sym) < 1e-12 * norm_l2(start):
        raise ChoquardError("symmetrization annihilates start")

    ws = _MetricWorkspace(p)
    eps = p.epsilon
    state = _NehariState(sym, p, kernel)

    step = 0.5
    q0 = None
    prev_vals = None
    prev_tangent = None
    tsq_scaled = np.inf
    it = 0
    for it in range(opts.max_iter):
        tangent, tsq, q0 = _tangent_direction(state, ws, opts, q0_prev=q0)
        tsq_scaled = tsq / eps ** 3
        if tsq_scaled < opts.tol_grad:
            break

        if opts.step_rule == "adaptive-bb" and prev_vals is not None:
            du = state.u.values - prev_vals
            dg = tangent - prev_tangent
            denom = _l2_pair(dg, du, p.grid.cell_volume)
            if denom != 0.0:
                step = abs(_l2_pair(du, du, p.grid.cell_volume) / denom)
            step = min(max(step, 1e-4), 100.0)
        elif opts.step_rule == "fixed":
            step = opts.fixed_step
        prev_vals = state.u.values.copy()
        prev_tangent = tangent.copy()

        accepted = False
        for _ in range(30):
            trial = _retract(state.u.values - step * tangent, p, s, kernel)
            if trial.energy <= state.energy * (1.0 + 1e-14):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break   # stalled at line-search resolution
        state = trial
    else:
        it = opts.max_iter

    converged = tsq_scaled < opts.tol_grad
    return SolveResult(
        u=state.u,
        energy_scaled=state.energy / eps ** 3,
        nehari_residual=state.nehari_residual(),
        grad_norm_scaled=float(tsq_scaled),
        hartree_window=0.25 * state.d,
        sector=s,
        epsilon=eps,
        iterations=it,
        converged=converged,
    )


def tangent_gradient(u, p, s, kernel, cg_tol=1e-12, nehari_tol=1e-6):
    """Metric gradient of J projected onto the Nehari tangent space at u.

    The output is orthogonal to the constraint gradient in the
    ||.||_{eps,A,V} inner product by construction; ``u`` must already lie
    on the Nehari manifold within ``nehari_tol``.
    """
    state = _NehariState(u.copy(), p, kernel)
    # _NehariState rescales; verify u was already (nearly) on the manifold
    scale_dev = abs(norm_l2(state.u) / norm_l2(u) - 1.0)
    if scale_dev > nehari_tol:
        raise ChoquardError(
            f"field is off the Nehari manifold (projection moved it by "
            f"{scale_dev:.2e})")
    opts = SolveOptions(cg_tol=cg_tol, cg_max_iter=2000)
    tangent, _, _ = _tangent_direction(state, _MetricWorkspace(p), opts)
    return ScalarField(p.grid, tangent)


def geometrically_distinct(u, v, tol=1e-2):
    """True iff no global phase aligns u with v within relative tol.

    Computes the optimal phase theta* = -arg <u, v>_{L2} and compares
    ||e^{i theta*} u - v||_{L2} / ||v||_{L2} against tol.
    """
    nu, nv = norm_l2(u), norm_l2(v)
    if nu == 0.0 or nv == 0.0:
        raise ChoquardError("geometric distinctness needs nonzero fields")
    overlap = complex(u.grid.cell_volume
                      * np.vdot(v.values, u.values))
    phase = 1.0 if overlap == 0 else overlap / abs(overlap)
    gap = norm_l2(ScalarField(u.grid, u.values / phase - v.values)) / nv
    return gap > tol


def ps_safe_threshold(p, s):
    """Box proxy for the compactness ceiling min(#Gx) Vinf^{3/2} E_1.

    Vinf (a liminf of V at infinity) is approximated by the smallest
    boundary value of V; the orbit count is 1 in untwisted sectors
    (the axis is admissible there) and m otherwise.
    """
    v = p.V.values.real
    v_boundary = min(v[0].min(), v[-1].min(), v[:, 0].min(), v[:, -1].min(),
                     v[:, :, 0].min(), v[:, :, -1].min())
    count = 1 if s.j == 0 else s.m
    return count * v_boundary ** 1.5 * E1_GOLDEN


def multistart(p, s, kernel, opts, seeds, ell=None, window_delta=None,
               entrance_scale=None, profiles=None):
    """Run minimize from an entrance map at each seed and deduplicate.

    Parameters
    ----------
    seeds : list of points
        Concentration sites; each seed uses lam = V(seed) for its bump.
    ell, window_delta : float, optional
        When both given, each result is checked against the energy window
        |eps^{-5} hartree_window - ell * E_1| < window_delta and flagged.
    entrance_scale : float, optional
        Cutoff dilation forwarded to the entrance construction.
    profiles : dict, optional
        Cache of limit profiles keyed by rounded lam (mutated in place).

    Returns the retained (pairwise geometrically distinct) results in
    seed order.  Failed seeds are skipped; their error messages are
    attached under ``flags["seed_failures"]`` of the first retained
    result so no run is silently lost.
    """
    from .ansatz import EntranceSpec, entrance
    from .symmetry import _sample_nearest

    profiles = {} if profiles is None else profiles
    results = []
    failures = {}
    for idx, seed in enumerate(seeds):
        lam = float(_sample_nearest(p.V, seed))
        key = round(lam, 12)
        if key not in profiles:
            profiles[key] = solve_limit(lam)
        try:
            start = entrance(EntranceSpec(tuple(seed), p.epsilon, s, lam),
                             p.A, p.grid, profile=profiles[key],
                             scale=entrance_scale)
            res = minimize(start, p, s, kernel, opts)
        except ChoquardError as exc:
            failures[idx] = str(exc)
            continue
        res.flags["seed_index"] = idx
        res.flags["ps_safe"] = bool(
            res.energy_scaled <= ps_safe_threshold(p, s))
        if ell is not None and window_delta is not None:
            gap = abs(res.hartree_window / p.epsilon ** 5 - ell * E1_GOLDEN)
            res.flags["window_ok"] = bool(gap < window_delta)
            res.flags["window_gap"] = float(gap)
        results.append(res)

    retained = []
    for res in results:
        if all(geometrically_distinct(res.u, kept.u) for kept in retained):
            retained.append(res)
        else:
            res.flags["duplicate"] = True
    if failures and retained:
        retained[0].flags["seed_failures"] = failures
    return retained
