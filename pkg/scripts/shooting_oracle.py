#!/usr/bin/env python3
"""Independent radial shooting computation of the ground-state energy E_1.

Solves the radial system

    u'' + (2/r) u' + W u = 0,        W'' + (2/r) W' = -4 pi u^2,

where W is the Coulomb potential of u^2 shifted by the linear term.  The
system is scale invariant under (u, W) -> (s^2 u(s.), s^2 W(s.)), so we fix
u(0) = 1 and shoot on W(0) by bisection: too large and u crosses zero, too
small and u blows up.  The physical ground state of

    -Delta u + u = (1/|x| * u^2) u

is recovered by rescaling so that W -> -1 at infinity.  The energy is
E_1 = (1/4) * integral(|grad u|^2 + u^2).

This script is the oracle for the golden value stored in
src/choquard/golden.py.  It shares no code with the main radial solver.
"""

import sys

import numpy as np
from scipy.integrate import solve_ivp


def rhs(r, y):
    u, du, w, dw = y
    return [du, -2.0 * du / r - w * u, dw, -2.0 * dw / r - 4.0 * np.pi * u * u]


def shoot(w0, r_end=60.0, dense=False):
    """Integrate from r ~ 0 with series initial data; classify the outcome.

    Returns (+1, r) if u crossed zero at r, (-1, r) if u started to blow up,
    or (0, sol) with the dense solution if neither happened before r_end.
    """
    r0 = 1e-8
    # series: u ~ 1 - w0 r^2/6,  W ~ w0 - (2 pi/3) r^2
    y0 = [1.0 - w0 * r0 ** 2 / 6.0, -w0 * r0 / 3.0,
          w0 - 2.0 * np.pi / 3.0 * r0 ** 2, -4.0 * np.pi / 3.0 * r0]

    def cross(r, y):
        return y[0]

    cross.terminal = True
    cross.direction = -1

    def blowup(r, y):
        return y[0] - 2.0

    blowup.terminal = True
    blowup.direction = 1

    sol = solve_ivp(rhs, (r0, r_end), y0, method="DOP853",
                    rtol=1e-13, atol=1e-14, events=(cross, blowup),
                    dense_output=dense, max_step=0.1)
    if sol.t_events[0].size:
        return 1, sol
    if sol.t_events[1].size:
        return -1, sol
    return 0, sol


def find_w0(lo=0.5, hi=5.0):
    flo, _ = shoot(lo)
    fhi, _ = shoot(hi)
    assert flo == -1 and fhi == 1, (flo, fhi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        f, _ = shoot(mid)
        if f == 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def main():
    w0 = find_w0()
    print(f"w0 = {w0:.16f}")

    _, sol = shoot(w0, r_end=60.0, dense=True)
    # follow the solution only while it still decays cleanly
    r = np.linspace(1e-8, sol.t[-1], 400000)
    u, du, w, dw = sol.sol(r)
    good = np.abs(u) > 1e-9
    # keep the decaying branch: cut at the last index before |u| re-grows
    idx = np.nonzero(~good)[0]
    if idx.size:
        r, u, du, w, dw = (a[: idx[0]] for a in (r, u, du, w, dw))
    print(f"followed to r = {r[-1]:.3f}, u there = {u[-1]:.3e}")

    # W_inf = w0 - 4 pi * int_0^inf t u^2 dt  (tail beyond r[-1] negligible)
    w_inf = w0 - 4.0 * np.pi * np.trapezoid(r * u * u, r)
    print(f"W_inf = {w_inf:.12f}")
    assert w_inf < 0.0
    s2 = -1.0 / w_inf          # sigma^2
    s = np.sqrt(s2)

    i_grad = np.trapezoid(du * du * r * r, r)
    i_mass = np.trapezoid(u * u * r * r, r)
    i_pot = np.trapezoid(w * u * u * r * r, r)
    # ODE identity: int u'^2 t^2 = int W u^2 t^2
    print(f"virial check: {i_grad:.10f} vs {i_pot:.10f} "
          f"(rel {abs(i_grad - i_pot) / i_grad:.2e})")

    norm2 = 4.0 * np.pi * (s ** 3 * i_grad + s * i_mass)
    d_val = 4.0 * np.pi * (s ** 3 * i_pot + s * i_mass)
    e1 = 0.25 * norm2
    print(f"||u||^2 = {norm2:.12f}")
    print(f"D(u)    = {d_val:.12f}   (Nehari: rel gap "
          f"{abs(norm2 - d_val) / norm2:.2e})")
    print(f"u(0)    = {s2:.12f}")
    print(f"E_1     = {e1:.10f}")

    if len(sys.argv) > 1:
        # dump the physical profile omega(t) = s^2 u(s t) on a uniform
        # mesh, for golden sup-norm comparisons against the main solver
        t = np.linspace(0.0, min(r[-1] / s, 20.0), 801)
        omega = s2 * np.interp(s * t, r, u, left=1.0)
        with open(sys.argv[1], "w") as fh:
            fh.write("r,omega\n")
            for ti, oi in zip(t, omega):
                fh.write(f"{ti:.12g},{oi:.12g}\n")
        print(f"profile written to {sys.argv[1]}")


if __name__ == "__main__":
    main()
