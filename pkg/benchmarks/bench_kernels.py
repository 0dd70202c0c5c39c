#!/usr/bin/env python3
"""Numba vs numpy timings for the graph kernels, plus one end-to-end run.

Usage: python benchmarks/bench_kernels.py [--sizes 50 100 200] [--repeat 5]

The kernel table calls both implementations directly. The end-to-end
line runs greedy_multi in a subprocess with VNE_NUMBA=1 and VNE_NUMBA=0,
since the flag is read once at import.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from vne import _kernels
from vne.instance import random_connected_graph

E2E = """
import time
from vne.suites import heuristic_instance
from vne.greedy import greedy_multi
inst = heuristic_instance(0)
greedy_multi(inst, 2, 0)  # warm-up (jit compile or cache load)
t = time.perf_counter()
greedy_multi(inst, 100, 0)
print(time.perf_counter() - t)
"""


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def bench_sizes(sizes, repeat):
    rng = np.random.default_rng(0)
    print(f"{'n':>5} {'kernel':<10} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for n in sizes:
        g = random_connected_graph(n, 2 * n, rng)
        w = rng.integers(1, 10, size=g.m).astype(np.float64)
        mat = g.weight_matrix(w)
        ok_e = np.ones(g.m, dtype=np.bool_)
        ok_n = np.ones(g.n, dtype=np.bool_)
        # warm-up so compile time is excluded
        _kernels.floyd_warshall_numba(mat)
        _kernels.dijkstra_numba(g.indptr, g.adj_node, g.adj_edge, w, ok_e, ok_n, 0)
        assert np.array_equal(_kernels.floyd_warshall_numba(mat), _kernels.floyd_warshall_numpy(mat))

        fw_a = best_of(lambda: _kernels.floyd_warshall_numba(mat), repeat)
        fw_b = best_of(lambda: _kernels.floyd_warshall_numpy(mat), repeat)
        print(f"{n:>5} {'floyd':<10} {fw_a * 1e3:>10.3f} {fw_b * 1e3:>10.3f} {fw_b / fw_a:>8.1f}")

        def sweep(fn):
            for s in range(min(n, 20)):
                fn(g.indptr, g.adj_node, g.adj_edge, w, ok_e, ok_n, s)

        dj_a = best_of(lambda: sweep(_kernels.dijkstra_numba), repeat)
        dj_b = best_of(lambda: sweep(_kernels.dijkstra_numpy), repeat)
        print(f"{n:>5} {'dijkstra':<10} {dj_a * 1e3:>10.3f} {dj_b * 1e3:>10.3f} {dj_b / dj_a:>8.1f}")


def bench_end_to_end():
    out = {}
    for flag in ("1", "0"):
        env = dict(os.environ, VNE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
        out[flag] = float(res.stdout.strip().splitlines()[-1])
    print(f"greedy_multi(100) on a 20-30/40-60 node instance: numba {out['1']:.2f}s, numpy {out['0']:.2f}s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-e2e", action="store_true", help="skip the subprocess end-to-end runs")
    a = ap.parse_args()
    if not _kernels.HAS_NUMBA:
        sys.exit("numba is not importable; nothing to compare")
    bench_sizes(a.sizes, a.repeat)
    if not a.no_e2e:
        bench_end_to_end()


if __name__ == "__main__":
    main()
