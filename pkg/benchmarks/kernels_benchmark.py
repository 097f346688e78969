"""Benchmark the compiled pointwise kernels against the numpy fallback.

Times the three fused operations used inside the solver iteration on a
128^3 grid (the acceptance-experiment size) and prints the per-call
medians and speedups.  Run after building the extension:

    python3 benchmarks/kernels_benchmark.py [n]
"""

import sys
import time

import numpy as np

try:
    from choquard import _kernels
except ImportError:
    sys.exit("compiled extension not available; build it first "
             "(pip install -e . --no-build-isolation)")


def median_time(fn, repeats=9):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return sorted(times)[len(times) // 2]


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 128
    rng = np.random.default_rng(0)
    v = (rng.standard_normal((n, n, n))
         + 1j * rng.standard_normal((n, n, n)))
    w = rng.random((n, n, n))
    vr = v.real.copy()
    flat_v, flat_w, flat_vr = v.reshape(-1), w.reshape(-1), vr.reshape(-1)

    cases = [
        ("abs2",
         lambda: flat_v.real ** 2 + flat_v.imag ** 2,
         lambda: _kernels.abs2(flat_v)),
        ("scaled_real_mul",
         lambda: 2.5 * flat_w * flat_v,
         lambda: _kernels.scaled_real_mul(flat_w, flat_v, 2.5)),
        ("weighted_mass",
         lambda: float(np.sum(flat_w * flat_vr ** 2)),
         lambda: _kernels.weighted_mass(flat_w, flat_vr)),
    ]
    print(f"grid {n}^3 ({n ** 3:,} nodes)")
    print(f"{'kernel':18s}{'numpy [ms]':>12s}{'compiled [ms]':>15s}"
          f"{'speedup':>9s}")
    for name, pure, compiled in cases:
        ref, new = pure(), compiled()
        assert np.allclose(ref, new), f"{name}: outputs disagree"
        tp = median_time(pure) * 1e3
        tc = median_time(compiled) * 1e3
        print(f"{name:18s}{tp:12.3f}{tc:15.3f}{tp / tc:9.2f}")


if __name__ == "__main__":
    main()
