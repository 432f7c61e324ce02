"""Timing comparison between the compiled and numpy kernel backends.

Run with:  python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from kptrack.kernels import _numpy as knp

try:
    from kptrack.kernels import _native as knative
except ImportError:
    knative = None


def _time(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    h = w = 96
    m = h * w
    v = rng.random(m)
    x = rng.uniform(-1, w, size=m)
    y = rng.uniform(-1, h, size=m)
    grid = rng.random((h, w))
    gx = rng.uniform(-1, w, size=50_000)
    gy = rng.uniform(-1, h, size=50_000)
    wts = rng.random(500)
    cum = np.cumsum(wts / wts.sum())
    u = (np.arange(500) + rng.random(500)) / 500.0

    cases = [
        ("splat_bilinear  (%d pts -> %dx%d)" % (m, h, w),
         lambda b: b.splat_bilinear(v, x, y, h, w)),
        ("gather_bilinear (50k pts)",
         lambda b: b.gather_bilinear(grid, gx, gy)),
        ("stratified_pick (500 particles)",
         lambda b: b.stratified_pick(cum, u)),
    ]

    backends = [("numpy", knp)]
    if knative is not None:
        backends.append(("native", knative))
    else:
        print("compiled backend not available; timing numpy only")

    print(f"{'kernel':<40}" + "".join(f"{name:>12}" for name, _ in backends)
          + ("     speedup" if len(backends) == 2 else ""))
    for label, call in cases:
        times = [_time(call, b) for _, b in backends]
        row = f"{label:<40}" + "".join(f"{t * 1e6:>10.1f}us" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
