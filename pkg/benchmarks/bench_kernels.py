"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--draws T] [--elements N] [--users K] [--symbols L] [--repeat R]

Both variants are imported directly, so the RISNOMA_DISABLE_NUMBA flag does
not matter here. The first numba call (compilation or cache load) is excluded.
"""

import argparse
import time

import numpy as np

from risnoma import kernels
from risnoma._accel import USE_NUMBA
from risnoma.channel import make_rng, sample_links


def _best_of(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--draws", type=int, default=512)
    ap.add_argument("--elements", type=int, default=1024)
    ap.add_argument("--users", type=int, default=4)
    ap.add_argument("--symbols", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    T, N, K, L = args.draws, args.elements, args.users, args.symbols
    rng = make_rng(0)
    h = sample_links((T, N), 1.0, rng)
    g = sample_links((T, K, N), 1.0, rng)
    h_est = h - 0.1 * sample_links((T, N), 1.0, rng)
    g_est = g - 0.1 * sample_links((T, K, N), 1.0, rng)
    bounds = np.linspace(0, N, K + 1).astype(np.int64)
    orders = np.full(K, 4, dtype=np.int64)
    symbols = rng.integers(0, 4, size=(T, L, K)).astype(np.int64)
    noise = sample_links((T, L, K), 0.5, rng)
    direct = np.zeros((T, K), dtype=np.complex128)

    coupling = kernels._coupling_numpy(h, g, h_est, g_est, bounds)
    cases = [
        ("coupling_matrix", kernels._coupling_loop, kernels._coupling_numpy, (h, g, h_est, g_est, bounds)),
        ("tdma_coupling", kernels._tdma_coupling_loop, kernels._tdma_coupling_numpy, (h, g, h_est, g_est)),
        ("detect_errors", kernels._detect_loop, kernels._detect_numpy,
         (coupling, symbols, noise, direct, 1.0, orders)),
        ("sinr_parts", kernels._sinr_parts_loop, kernels._sinr_parts_numpy, (coupling, symbols, orders)),
    ]
    print(f"T={T} N={N} K={K} L={L}, best of {args.repeat}; default backend: "
          f"{'numba' if USE_NUMBA else 'numpy'}")
    print(f"{'kernel':<16}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, fast, slow, a in cases:
        fast(*a)  # compile / load cache
        tf = _best_of(fast, a, args.repeat)
        ts = _best_of(slow, a, args.repeat)
        print(f"{name:<16}{tf * 1e3:>12.2f}{ts * 1e3:>12.2f}{ts / tf:>10.1f}")


if __name__ == "__main__":
    main()
