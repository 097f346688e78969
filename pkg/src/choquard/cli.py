"""Experiment orchestration: config parsing and the five subcommands.

Subcommands
-----------
ground       solve the rescaled limit equation and write the radial profile
ansatz       sweep the scaled entrance-map energy over epsilon
solve        run the full constrained minimization experiment from a config
concentrate  localize the concentration orbit of a stored field
verify       run the fast invariant suite and print a pass/fail table

Configs are plain ``key = value`` text with dotted section names
(``symmetry.m = 2``); every key has a default and unknown keys are hard
errors.  Exit codes: 1 for configuration errors, 2 for solver
non-convergence, 3 for an invariant failure under ``verify``.
"""

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .ansatz import EntranceSpec, cutoff_dilation, entrance_energy
from .baryorbit import _find_peaks, _refine_quadratic, localize
from .coulomb import CoulombKernel, hartree_energy
from .errors import ChoquardError, ConfigError, ConvergenceError
from .field import ScalarField, make_grid, load_field, save_field
from .golden import E1_GOLDEN
from .groundstate import solve_limit, save_profile
from .magnetic import (Potentials, diamagnetic_check, nehari_residual,
                       nehari_project, projected_energy, energy,
                       rescale_identity_check)
from .presets import electric_potential, vector_potential
from .solver import SolveOptions, multistart
from .symmetry import (SymmetrySector, check_potentials_equivariant,
                       ell_and_mtau, equivariance_defect, orbit_points,
                       symmetrize, _sample_nearest)


def fmt(x):
    """Floating-point text with 12 significant digits."""
    return f"{float(x):.12g}"


def _parse_float_list(raw):
    items = [t.strip() for t in raw.split(",") if t.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(float(t) for t in items)


# key -> (default, parser); the parser also types the default's dump format
_SCHEMA = {
    "grid.n": (128, int),
    "grid.half_length": (2.0, float),
    "potentials.magnetic": ("zero", str),
    "potentials.magnetic_strength": (1.0, float),
    "potentials.electric": ("ring-well", str),
    "potentials.v0": (1.0, float),
    "potentials.ring_radius": (1.0, float),
    "potentials.planar_curvature": (1.0, float),
    "potentials.axial_curvature": (1.0, float),
    "symmetry.m": (2, int),
    "symmetry.j": (0, int),
    "sweep.epsilon": ((0.4, 0.2, 0.1), _parse_float_list),
    "solver.tol_grad": (1e-6, float),
    "solver.max_iter": (400, int),
    "solver.step_rule": ("adaptive-bb", str),
    "solver.fixed_step": (0.5, float),
    "solver.cg_tol": (1e-6, float),
    "solver.cg_max_iter": (400, int),
    "ansatz.cutoff_exponent": (0.85, float),
    "ansatz.cutoff_coefficient": (1.0, float),
    "seeds.perturbations": (3, int),
    "seeds.perturbation_scale": (0.05, float),
    "window.delta": (0.1 * E1_GOLDEN, float),
    "output.directory": ("runs", str),
    "rng.seed": (0, int),
}


class ExperimentConfig:
    """Validated key/value store over the experiment schema."""

    def __init__(self, values):
        self.values = dict(values)
        self._validate()

    def __getitem__(self, key):
        return self.values[key]

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) \
            and self.values == other.values

    def _validate(self):
        m, j = self["symmetry.m"], self["symmetry.j"]
        if m < 1:
            raise ConfigError("symmetry.m must be >= 1")
        if not 0 <= j < m:
            raise ConfigError("symmetry.j must lie in [0, symmetry.m)")
        if any(e <= 0 for e in self["sweep.epsilon"]):
            raise ConfigError("sweep.epsilon entries must be positive")
        if self["grid.n"] < 8:
            raise ConfigError("grid.n must be >= 8")
        if self["grid.half_length"] <= 0:
            raise ConfigError("grid.half_length must be positive")
        if self["solver.step_rule"] not in ("adaptive-bb", "fixed"):
            raise ConfigError("solver.step_rule must be adaptive-bb or fixed")
        if self["ansatz.cutoff_exponent"] <= 0 \
                or self["ansatz.cutoff_coefficient"] <= 0:
            raise ConfigError("ansatz cutoff parameters must be positive")

    def dump(self):
        """Effective config text; reloads to an identical experiment."""
        lines = []
        for key in sorted(self.values):
            val = self.values[key]
            if isinstance(val, tuple):
                text = ", ".join(repr(float(v)) for v in val)
            elif isinstance(val, float):
                text = repr(val)
            else:
                text = str(val)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"


def default_config():
    return ExperimentConfig({k: d for k, (d, _) in _SCHEMA.items()})


def parse_config(text):
    """Parse ``key = value`` config text over the schema defaults."""
    values = {k: d for k, (d, _) in _SCHEMA.items()}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, raw = stripped.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = key.strip(), raw.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        try:
            values[key] = _SCHEMA[key][1](raw)
        except ValueError as exc:
            raise ConfigError(
                f"line {lineno}: bad value for {key!r}: {exc}") from exc
    return ExperimentConfig(values)


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config(text)


def build_grid(cfg):
    return make_grid(cfg["grid.n"], cfg["grid.half_length"])


def build_sector(cfg):
    return SymmetrySector(cfg["symmetry.m"], cfg["symmetry.j"])


def build_fields(cfg, grid):
    """The (A, V) pair of the config on a grid."""
    A = vector_potential(cfg["potentials.magnetic"], grid,
                         strength=cfg["potentials.magnetic_strength"])
    V = electric_potential(cfg["potentials.electric"], grid,
                           v0=cfg["potentials.v0"],
                           a=cfg["potentials.planar_curvature"],
                           b=cfg["potentials.axial_curvature"],
                           r0=cfg["potentials.ring_radius"])
    return A, V


def build_solve_options(cfg):
    return SolveOptions(
        tol_grad=cfg["solver.tol_grad"],
        max_iter=cfg["solver.max_iter"],
        step_rule=cfg["solver.step_rule"],
        fixed_step=cfg["solver.fixed_step"],
        cg_tol=cfg["solver.cg_tol"],
        cg_max_iter=cfg["solver.cg_max_iter"],
        sweep=cfg["sweep.epsilon"],
    )


def _orbit_representatives(records, s, tol):
    """One representative point per group orbit among the admissible set."""
    reps = []
    for rec in records:
        pt = np.array([rec["x"], rec["y"], rec["z"]])
        if not any(
                any(np.linalg.norm(np.asarray(g) - pt) < tol
                    for g in orbit_points(r, s))
                for r in reps):
            reps.append(pt)
    return reps


def _top_peak(u):
    """Quadratically refined position of the highest interior peak of |u|."""
    abs_vals = u.abs().values.real
    peaks = _find_peaks(abs_vals, u.grid)
    if not peaks:
        raise ChoquardError("no interior peak found")
    return _refine_quadratic(abs_vals, peaks[0], u.grid)


def _localized_orbit(res, p, s, profiles):
    """Localization report of a solve result, seeded at its top peak."""
    peak = _top_peak(res.u)
    lam = float(_sample_nearest(p.V, peak))
    key = round(lam, 12)
    if key not in profiles:
        profiles[key] = solve_limit(lam)
    return localize(res.u, res.epsilon, s, profiles[key], p,
                    candidates=[peak])


# ----------------------------------------------------------------- ground

def cmd_ground(args):
    profile = solve_limit(args.lam, tol=args.tol)
    out = Path(args.out) if args.out else Path(f"profile_{args.lam:g}.csv")
    save_profile(profile, out)
    print(f"lambda = {fmt(profile.lam)}")
    print(f"energy = {fmt(profile.energy)}")
    print(f"profile = {out}")
    return 0


# ----------------------------------------------------------------- ansatz

def cmd_ansatz(args):
    cfg = load_config(args.config) if args.config else default_config()
    grid = build_grid(cfg)
    s = SymmetrySector(args.m, args.j)
    xi = tuple(float(t) for t in args.xi.split(","))
    if len(xi) != 3:
        raise ConfigError("--xi expects three comma-separated coordinates")
    sweep = _parse_float_list(args.sweep) if args.sweep else (args.eps,)

    A, V = build_fields(cfg, grid)
    check_potentials_equivariant(A, V, s)
    kernel = CoulombKernel.build(grid)
    lam = float(_sample_nearest(V, xi))
    profile = solve_limit(lam)

    lines = ["epsilon,energy_scaled"]
    for eps in sweep:
        scale = cutoff_dilation(eps, cfg["ansatz.cutoff_exponent"],
                                cfg["ansatz.cutoff_coefficient"])
        p = Potentials(A, V, eps)
        val = entrance_energy(EntranceSpec(xi, eps, s, lam), p, kernel,
                              profile=profile, scale=scale)
        lines.append(f"{fmt(eps)},{fmt(val)}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


# ------------------------------------------------------------------ solve

def _make_seeds(reps, cfg, grid):
    """Orbit representatives plus deterministic random perturbations."""
    rng = np.random.default_rng(cfg["rng.seed"])
    seeds = [np.asarray(r, dtype=float) for r in reps]
    scale = cfg["seeds.perturbation_scale"]
    for k in range(cfg["seeds.perturbations"]):
        base = seeds[k % len(reps)]
        seeds.append(base + rng.normal(size=3) * scale)
    return seeds


def cmd_solve(args):
    cfg = load_config(args.config)
    grid = build_grid(cfg)
    s = build_sector(cfg)
    A, V = build_fields(cfg, grid)
    try:
        check_potentials_equivariant(A, V, s)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    kernel = CoulombKernel.build(grid)
    opts = build_solve_options(cfg)
    ell, records = ell_and_mtau(V, s)
    if not records:
        raise ConfigError(
            "no admissible concentration sites: the minimizing set of "
            "(orbit cardinality) V^{3/2} is annihilated by the sector")
    reps = _orbit_representatives(records, s, 3.0 * grid.spacing)
    seeds = _make_seeds(reps, cfg, grid)

    stamp = time.strftime("%Y%m%d-%H%M%S")
    run_dir = Path(cfg["output.directory"]) / f"run_{stamp}"
    suffix = 0
    while run_dir.exists():
        suffix += 1
        run_dir = run_dir.with_name(f"run_{stamp}-{suffix}")
    fields_dir = run_dir / "fields"
    fields_dir.mkdir(parents=True)
    (run_dir / "config.txt").write_text(cfg.dump())

    profiles = {}
    summary = ["epsilon,sector_j,energy_scaled,grad_norm_scaled,"
               "orbit_x,orbit_y,orbit_z"]
    result_records = []
    any_unconverged_sweep = False
    for eps in cfg["sweep.epsilon"]:
        p = Potentials(A, V, eps)
        scale = cutoff_dilation(eps, cfg["ansatz.cutoff_exponent"],
                                cfg["ansatz.cutoff_coefficient"])
        results = multistart(p, s, kernel, opts, seeds, ell=ell,
                             window_delta=cfg["window.delta"],
                             entrance_scale=scale, profiles=profiles)
        if not any(r.converged for r in results):
            any_unconverged_sweep = True
        for k, res in enumerate(results):
            name = f"eps{fmt(eps)}_j{s.j}_{k}.chqf"
            save_field(res.u, fields_dir / name)
            try:
                report = _localized_orbit(res, p, s, profiles)
                orbit_xi = [float(v) for v in report.xi]
                residual = report.residual_scaled
            except ChoquardError:
                orbit_xi, residual = [math.nan] * 3, math.nan
            summary.append(",".join(
                [fmt(eps), str(s.j), fmt(res.energy_scaled),
                 fmt(res.grad_norm_scaled)] + [fmt(v) for v in orbit_xi]))
            result_records.append({
                "epsilon": eps,
                "sector": {"m": s.m, "j": s.j},
                "energy_scaled": res.energy_scaled,
                "nehari_residual": res.nehari_residual,
                "grad_norm_scaled": res.grad_norm_scaled,
                "hartree_window": res.hartree_window,
                "iterations": res.iterations,
                "converged": res.converged,
                "orbit_xi": orbit_xi,
                "localization_residual_scaled": residual,
                "flags": res.flags,
                "field": str(Path("fields") / name),
            })

    (run_dir / "summary.csv").write_text("\n".join(summary) + "\n")
    report = {
        "ell": ell,
        "admissible_sites": records,
        "results": result_records,
    }
    (run_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"run directory: {run_dir}")
    print("\n".join(summary))
    if any_unconverged_sweep:
        raise ConvergenceError(
            "at least one sweep value produced no converged result "
            f"(see {run_dir / 'report.json'})")
    return 0


# ------------------------------------------------------------ concentrate

def cmd_concentrate(args):
    cfg = load_config(args.config) if args.config else default_config()
    u = load_field(args.field)
    s = SymmetrySector(args.m, args.j)
    A, V = build_fields(cfg, u.grid)
    p = Potentials(A, V, args.eps)
    peak = _top_peak(u)
    lam = float(_sample_nearest(V, peak))
    profile = solve_limit(lam)
    report = localize(u, args.eps, s, profile, p)
    payload = {
        "xi": [float(v) for v in report.xi],
        "orbit_cardinality": report.orbit.cardinality,
        "isotropy_in_kernel": report.orbit.isotropy_in_kernel,
        "residual_scaled": report.residual_scaled,
        "candidates_considered": report.candidates_considered,
        "margin": None if math.isinf(report.margin) else report.margin,
        "profile_lambda": lam,
    }
    print(json.dumps(payload, indent=2))
    return 0


# ------------------------------------------------------------------ verify

def _random_smooth(grid, rng, complex_valued=True, cutoff_fraction=0.25):
    """Band-limited random field decaying to zero at the box boundary."""
    shape = (grid.n,) * 3
    vals = rng.standard_normal(shape)
    if complex_valued:
        vals = vals + 1j * rng.standard_normal(shape)
    import scipy.fft

    kx, ky, kz = grid.wavenumbers()
    k2 = kx ** 2 + ky ** 2 + kz ** 2
    kmax2 = (cutoff_fraction * np.pi * grid.n / (2 * grid.half_length)) ** 2
    spec = scipy.fft.fftn(vals) * np.exp(-4.0 * k2 / kmax2)
    vals = scipy.fft.ifftn(spec)
    envelope = np.exp(-2.0 * grid.radius_sq() / grid.half_length ** 2)
    vals = vals * envelope
    if not complex_valued:
        vals = vals.real
    return ScalarField(grid, np.ascontiguousarray(vals),
                       real=not complex_valued)


def _verify_checks(cfg):
    """Yield (name, ok, detail) for the fast invariant suite."""
    rng = np.random.default_rng(cfg["rng.seed"])

    # config round-trip
    rt = parse_config(cfg.dump())
    yield ("config-round-trip", rt == cfg, "reparse equals original")

    # limit-equation scaling law and golden energy
    p1 = solve_limit(1.0)
    p4 = solve_limit(4.0)
    dev = abs(p4.energy / p1.energy - 8.0) / 8.0
    yield ("limit-scaling-law", dev < 1e-3, f"relative deviation {dev:.2e}")
    gdev = abs(p1.energy - E1_GOLDEN) / E1_GOLDEN
    yield ("golden-energy", gdev < 1e-5, f"relative deviation {gdev:.2e}")

    grid = make_grid(48, 6.0)
    kernel = CoulombKernel.build(grid)

    # Gaussian Coulomb closed form
    gauss = ScalarField.from_real(grid, np.exp(-0.5 * grid.radius_sq()))
    exact = math.pi ** 2.5 * math.sqrt(2.0)
    cdev = abs(hartree_energy(gauss, kernel) - exact) / exact
    yield ("gaussian-coulomb", cdev < 2e-2, f"relative deviation {cdev:.2e}")

    # Nehari projection identities on random fields
    A = vector_potential("standard", grid, 0.5)
    V = electric_potential("constant", grid, v0=1.0)
    p = Potentials(A, V, 0.5)
    worst_res, worst_gap = 0.0, 0.0
    for _ in range(5):
        u = _random_smooth(grid, rng)
        proj = nehari_project(u, p, kernel)
        worst_res = max(worst_res, nehari_residual(proj, p, kernel))
        closed = projected_energy(u, p, kernel)
        direct = energy(proj, p, kernel).total
        worst_gap = max(worst_gap, abs(closed - direct) / abs(direct))
    yield ("nehari-projection", worst_res < 1e-10,
           f"max residual {worst_res:.2e}")
    yield ("projected-energy-closed-form", worst_gap < 1e-10,
           f"max relative gap {worst_gap:.2e}")

    # diamagnetic inequality
    worst = 0
    for _ in range(5):
        u = _random_smooth(grid, rng)
        violations, _ = diamagnetic_check(u, p)
        worst = max(worst, violations)
    yield ("diamagnetic-inequality", worst == 0, f"worst violations {worst}")

    # rescaling identity
    u = _random_smooth(grid, rng)
    lhs, rhs = rescale_identity_check(u, p)
    rdev = abs(lhs - rhs) / max(abs(rhs), 1e-30)
    yield ("rescaling-identity", rdev < 1e-4, f"relative deviation {rdev:.2e}")

    # symmetrization is an idempotent projector
    s = SymmetrySector(4, 1)
    u = _random_smooth(grid, rng)
    sym = symmetrize(u, s)
    defect = equivariance_defect(sym, s)
    yield ("symmetrize-equivariance", defect < 1e-10,
           f"equivariance defect {defect:.2e}")

    # configured potentials are equivariant
    Ac, Vc = build_fields(cfg, grid)
    try:
        check_potentials_equivariant(Ac, Vc, build_sector(cfg))
        yield ("potentials-equivariant", True, "generator check passed")
    except ValueError as exc:
        yield ("potentials-equivariant", False, str(exc))


def cmd_verify(args):
    cfg = load_config(args.config) if args.config else default_config()
    failures = 0
    print(f"{'check':34s}{'status':8s}detail")
    for name, ok, detail in _verify_checks(cfg):
        status = "PASS" if ok else "FAIL"
        failures += 0 if ok else 1
        print(f"{name:34s}{status:8s}{detail}")
    if failures:
        print(f"{failures} invariant check(s) failed")
        return 3
    print("all invariant checks passed")
    return 0


# ------------------------------------------------------------------- main

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="choquard",
        description="Variational solver and verification suite for the "
                    "semiclassical magnetic Choquard equation.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("ground", help="solve the rescaled limit equation")
    g.add_argument("--lambda", dest="lam", type=float, required=True)
    g.add_argument("--tol", type=float, default=1e-9)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_ground)

    a = sub.add_parser("ansatz", help="entrance-map energy sweep")
    a.add_argument("--xi", required=True, help="site as x,y,z")
    a.add_argument("--eps", type=float, required=True)
    a.add_argument("--m", type=int, required=True)
    a.add_argument("--j", type=int, required=True)
    a.add_argument("--sweep", default=None, help="comma list of epsilons")
    a.add_argument("--config", default=None)
    a.add_argument("--out", default=None)
    a.set_defaults(func=cmd_ansatz)

    so = sub.add_parser("solve", help="run the full experiment")
    so.add_argument("--config", required=True)
    so.set_defaults(func=cmd_solve)

    c = sub.add_parser("concentrate", help="localize a stored field")
    c.add_argument("--field", required=True)
    c.add_argument("--eps", type=float, required=True)
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--j", type=int, required=True)
    c.add_argument("--config", default=None)
    c.set_defaults(func=cmd_concentrate)

    v = sub.add_parser("verify", help="run the invariant suite")
    v.add_argument("--config", default=None)
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 2
    except ChoquardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
