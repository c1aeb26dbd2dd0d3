#!/usr/bin/env python3
"""Benchmark the compiled kernel extension against the pure-Python fallback.

Covers the two hot paths: tour-refinement moves (sampling and the
deterministic sweep) and all-segment-pairs boundary distances (transition
graph construction).  Run: python benchmarks/bench_kernels.py
"""

import math
import time

import numpy as np

from spotspray._core import available_backends, get_backend


def timed(fn, *args, repeat=3):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def random_matrix(n, seed=0):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 1000, (n, 2))
    c = np.hypot(pts[:, 0, None] - pts[None, :, 0], pts[:, 1, None] - pts[None, :, 1])
    np.fill_diagonal(c, 0.0)
    return np.ascontiguousarray(c), pts


def random_ring(n, radius, seed):
    rng = np.random.default_rng(seed)
    ang = np.sort(rng.uniform(0, 2 * math.pi, n))
    r = radius * rng.uniform(0.7, 1.0, n)
    return np.ascontiguousarray(
        np.column_stack([r * np.cos(ang), r * np.sin(ang)]))


def main():
    backends = available_backends()
    print(f"available backends: {', '.join(backends)}")
    if "compiled" not in backends:
        print("compiled extension missing; building it first makes this comparison meaningful")
    rows = []

    cost, pts = random_matrix(200)
    seq = list(range(200))
    px = np.ascontiguousarray(pts[:, 0])
    py = np.ascontiguousarray(pts[:, 1])

    moves = {"compiled": 2_000_000, "python": 50_000}
    for name in backends:
        k = get_backend(name)
        n_moves = moves[name]
        t, _ = timed(k.h2_refine, cost, seq, 42, n_moves, 1e9, repeat=2)
        rows.append((f"h2 sampling ({name})", f"{n_moves / t / 1e6:.2f} M moves/s", t))

    for name in backends:
        k = get_backend(name)
        t, out = timed(k.h4_refine, cost, seq, px, py, 1e-9, 10_000, repeat=2)
        rows.append((f"h4 sweep to convergence, 200 nodes ({name})",
                     f"{out[2] / t / 1e6:.2f} M pair checks/s", t))

    a = random_ring(60, 50, 1)
    b = random_ring(60, 50, 2) + np.array([200.0, 0.0])
    reps = {"compiled": 2000, "python": 50}
    for name in backends:
        k = get_backend(name)
        n = reps[name]

        def burst():
            for _ in range(n):
                k.polygon_pair_closest(a, b)

        t, _ = timed(burst, repeat=2)
        per = t / n
        rows.append((f"polygon pair closest, 60x60 vertices ({name})",
                     f"{1 / per:.0f} pairs/s", per))

    print()
    width = max(len(r[0]) for r in rows) + 2
    for label, rate, t in rows:
        print(f"{label:<{width}} {rate:>18}   ({t * 1e3:8.2f} ms)")

    if len(backends) == 2:
        print()
        ck, fb = get_backend("compiled"), get_backend("python")
        t_c, _ = timed(ck.h2_refine, cost, seq, 42, 200_000, 1e9, repeat=2)
        t_p, _ = timed(fb.h2_refine, cost, seq, 42, 200_000, 1e9, repeat=1)
        print(f"h2 speedup, identical 200k-move run: {t_p / t_c:.0f}x")
        r_c = ck.h2_refine(cost, seq, 42, 100_000, 1e9)
        r_p = fb.h2_refine(cost, seq, 42, 100_000, 1e9)
        same = r_c[0] == r_p[0] and r_c[1] == r_p[1]
        print(f"bit-identical result across backends: {same}")


if __name__ == "__main__":
    main()
