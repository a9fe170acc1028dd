"""Timing comparison of the compiled and pure-Python kernel backends.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

Each hot kernel is timed on a representative workload.  The compiled
extension mainly wins on the capture integrals (tight per-node loops) and
on the Lommel overlap quadrature (O(n^2) kernel assembly without the n^2
temporary).  When the extension is not built only the python column runs.
"""

from __future__ import annotations

import time

import numpy as np

from fsqkd import kernels


def _time(fn, *args, repeat=5, **kwargs):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    backends = kernels.backends()
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':<38}" + "".join(f"{name:>14}" for name in backends))

    rng = np.random.default_rng(0)
    v = rng.uniform(-30.0, 30.0, 200_000)
    row = [_time(mod.scaled_re_erf, 1.3, v) for mod in backends.values()]
    _report("scaled_re_erf (200k points)", backends, row)

    edges = np.linspace(-2.0, 2.0, 12)
    row = [
        _time(mod.capture_segments, 0.4, 60.0, edges, repeat=3)
        for mod in backends.values()
    ]
    _report("capture_segments (11 pixels, hard)", backends, row)

    row = [
        _time(mod.capture_interval, 1.1, 8.0, -1.0, 1.0, repeat=10)
        for mod in backends.values()
    ]
    _report("capture_interval (smooth)", backends, row)

    k = 2.0 * np.pi / 1.55e-6
    for label, (p, l, L) in {
        "lg_radial_overlap l=0, 1 km": (0, 0, 1000.0),
        "lg_radial_overlap l=12, 1 km": (0, 12, 1000.0),
        "lg_radial_overlap l=4, 250 m": (0, 4, 250.0),
    }.items():
        row = [
            _time(mod.lg_radial_overlap, p, p, l, 0.02, k, L, 0.0707, 0.0707, repeat=3)
            for mod in backends.values()
        ]
        _report(label, backends, row)


def _report(label, backends, row):
    cells = "".join(f"{t * 1e3:>11.3f} ms" for t in row)
    speedup = ""
    if len(row) == 2:
        speedup = f"   ({row[0] / row[1]:.1f}x)"
    print(f"{label:<38}{cells}{speedup}")


if __name__ == "__main__":
    main()
