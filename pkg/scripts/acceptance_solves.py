"""Precompute (and cache) the expensive end-to-end acceptance solves.

Ring-well potential, no magnetic field, rotation order m = 2, grid
n = 128, L = 2.  Solves for sectors j = 0 (eps in {0.4, 0.2, 0.1}) and
j = 1 (eps = 0.1) from a two-bump entrance start at (1, 0, 0), caching
each converged field and its diagnostics under tests/_solve_cache so the
acceptance suite does not recompute them.

Usage: python3 scripts/acceptance_solves.py [j:eps ...]
Default jobs: 0:0.4 0:0.2 0:0.1 1:0.1
"""

import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from choquard.ansatz import EntranceSpec, cutoff_dilation, entrance
from choquard.coulomb import CoulombKernel
from choquard.field import make_grid, save_field
from choquard.groundstate import solve_limit
from choquard.magnetic import Potentials
from choquard.presets import electric_potential, vector_potential
from choquard.solver import SolveOptions, minimize
from choquard.symmetry import SymmetrySector

CACHE = Path(__file__).resolve().parents[1] / "tests" / "_solve_cache"

N, L = 128, 2.0
XI = (1.0, 0.0, 0.0)
CUTOFF_EXPONENT = 0.85


def run_job(j, eps, grid, V, A, kernel, profile):
    s = SymmetrySector(2, j)
    scale = cutoff_dilation(eps, CUTOFF_EXPONENT)
    start = entrance(EntranceSpec(XI, eps, s, 1.0), A, grid,
                     profile=profile, scale=scale)
    p = Potentials(A, V, eps)
    opts = SolveOptions(tol_grad=1e-6, max_iter=400, cg_tol=1e-6)
    t0 = time.time()
    res = minimize(start, p, s, kernel, opts)
    elapsed = time.time() - t0
    tag = f"ringwell_n{N}_j{j}_eps{eps:g}"
    save_field(res.u, CACHE / f"{tag}.chqf")
    meta = {
        "n": N, "L": L, "m": 2, "j": j, "epsilon": eps,
        "cutoff_exponent": CUTOFF_EXPONENT,
        "energy_scaled": res.energy_scaled,
        "nehari_residual": res.nehari_residual,
        "grad_norm_scaled": res.grad_norm_scaled,
        "hartree_window": res.hartree_window,
        "iterations": res.iterations,
        "converged": res.converged,
        "seconds": elapsed,
    }
    (CACHE / f"{tag}.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(f"{tag}: converged={res.converged} iters={res.iterations} "
          f"energy_scaled={res.energy_scaled:.8f} "
          f"grad={res.grad_norm_scaled:.3e} ({elapsed:.0f}s)", flush=True)


def main(argv):
    CACHE.mkdir(parents=True, exist_ok=True)
    jobs = [(0, 0.4), (0, 0.2), (0, 0.1), (1, 0.1)]
    if argv:
        jobs = [(int(a.split(":")[0]), float(a.split(":")[1])) for a in argv]
    grid = make_grid(N, L)
    V = electric_potential("ring-well", grid)
    A = vector_potential("zero", grid)
    kernel = CoulombKernel.build(grid)
    profile = solve_limit(1.0)
    for j, eps in jobs:
        run_job(j, eps, grid, V, A, kernel, profile)


if __name__ == "__main__":
    main(sys.argv[1:])
