#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the two hot paths (full all-PP auction playouts and tree searches) on
both backends and prints the throughput ratio.  The active backend for the
library itself is chosen via the SAABID_BACKEND env flag; here both modules
are exercised side by side in one process.

Usage: python3 benchmarks/benchmark_backends.py [--samples 2000] [--iters 2000]
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from saabid import exposure_instance
from saabid.auction import AuctionState, pack_profiles, termination_bound
from saabid.search import SearchParams, _pack, _search_python, search
from saabid import kernels_numpy

try:
    from saabid import kernels_numba
except ImportError:
    kernels_numba = None


def bench_playouts(kern, label: str, samples: int) -> float:
    cfg, profiles = exposure_instance()
    values, budgets = pack_profiles(profiles, cfg.m_items)
    preds = np.zeros((cfg.n_bidders, cfg.m_items))
    ticks0 = np.zeros(cfg.m_items, dtype=np.int64)
    winner0 = np.full(cfg.m_items, -1, dtype=np.int64)
    elig0 = np.full(cfg.n_bidders, cfg.m_items, dtype=np.int64)
    max_rounds = termination_bound(profiles, cfg.epsilon) + 1
    seeds = np.arange(1, samples + 1, dtype=np.uint64)
    # warm-up (numba compile)
    kern.playout_closing_sums(
        values, budgets, preds, ticks0, winner0, elig0, cfg.epsilon, max_rounds, seeds[:2]
    )
    t0 = time.perf_counter()
    kern.playout_closing_sums(
        values, budgets, preds, ticks0, winner0, elig0, cfg.epsilon, max_rounds, seeds
    )
    dt = time.perf_counter() - t0
    print(f"  {label:6s}: {samples} playouts in {dt:8.3f} s  ({samples / dt:10.0f}/s)")
    return dt


def bench_search(iters: int) -> None:
    cfg, profiles = exposure_instance(budget1=12.0, budget2=16.0)
    state = AuctionState.initial(cfg)
    p_star = np.array([7.5, 7.2])
    params = SearchParams(alpha=7.0, n_act=8, r_max=10, iterations=iters, rng_seed=3)

    results = {}
    if kernels_numba is not None:
        search(state, 1, profiles, p_star, params)  # warm-up compile
        t0 = time.perf_counter()
        res = search(state, 1, profiles, p_star, params)
        results["numba (fused)"] = time.perf_counter() - t0
        assert res.iterations == iters

    os.environ["SAABID_BACKEND"] = "numpy"
    try:
        data = _pack(cfg, profiles)
        t0 = time.perf_counter()
        res = _search_python(state, 1, data, p_star, params, seed=3, start=t0)
        results["numpy (python driver)"] = time.perf_counter() - t0
    finally:
        os.environ.pop("SAABID_BACKEND", None)

    for label, dt in results.items():
        print(f"  {label:22s}: {iters} iterations in {dt:8.3f} s  ({iters / dt:10.0f}/s)")
    if len(results) == 2:
        vals = list(results.values())
        print(f"  speedup: {vals[1] / vals[0]:.1f}x")


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=20000)
    ap.add_argument("--iters", type=int, default=2000)
    args = ap.parse_args()

    print("playout throughput (canonical 2x2 exposure instance, all-SB):")
    t_np = bench_playouts(kernels_numpy, "numpy", max(200, args.samples // 100))
    if kernels_numba is not None:
        t_nb = bench_playouts(kernels_numba, "numba", args.samples)
        per_np = t_np / max(200, args.samples // 100)
        per_nb = t_nb / args.samples
        print(f"  speedup: {per_np / per_nb:.1f}x per playout")
    else:
        print("  numba unavailable; fallback only")

    print("search throughput:")
    bench_search(args.iters)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
