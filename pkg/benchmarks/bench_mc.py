"""Benchmark: compiled vs pure-numpy Monte Carlo intersection estimator.

Run as ``python benchmarks/bench_mc.py [--samples N] [--pairs N]``.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from spheredet import _mc_python, montecarlo
from spheredet.geometry import Sphere, intersection_volume
from spheredet.montecarlo import _lens_box


def _random_pairs(n: int, rng: np.random.Generator):
    pairs = []
    while len(pairs) < n:
        r_a, r_b = rng.uniform(0.5, 10.0, size=2)
        d = rng.uniform(0.0, 1.2 * (r_a + r_b))
        if d >= r_a + r_b:  # keep only pairs the sampler actually works on
            continue
        pairs.append((Sphere((0.0, 0.0, 0.0), r_a), Sphere((0.0, 0.0, d), r_b)))
    return pairs


def _run(backend, pairs, samples: int, seed: int) -> tuple:
    total_error = 0.0
    start = time.perf_counter()
    for index, (a, b) in enumerate(pairs):
        d = float(np.linalg.norm(np.subtract(a.center, b.center)))
        box = _lens_box(a.radius, b.radius, d)
        x_lo, x_hi, rho = box
        bit_generator = np.random.PCG64(seed + index)
        hits = backend.count_hits(
            bit_generator, samples, a.radius, b.radius, d, x_lo, x_hi, rho
        )
        volume = (x_hi - x_lo) * (2.0 * rho) ** 2 * hits / samples
        exact = intersection_volume(a, b)
        total_error += abs(volume - exact) / exact
    elapsed = time.perf_counter() - start
    return elapsed, total_error / len(pairs)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=1_000_000)
    parser.add_argument("--pairs", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    pairs = _random_pairs(args.pairs, np.random.default_rng(args.seed))
    backends = [("numpy", _mc_python)]
    if montecarlo.COMPILED_BACKEND:
        from spheredet import _mc_core

        backends.insert(0, ("compiled", _mc_core))
    else:
        print("compiled backend unavailable; benchmarking numpy only")

    print(f"{args.pairs} pairs x {args.samples:,} samples each")
    timings = {}
    for name, backend in backends:
        elapsed, mean_rel_error = _run(backend, pairs, args.samples, args.seed)
        timings[name] = elapsed
        rate = args.pairs * args.samples / elapsed / 1e6
        print(
            f"  {name:>8}: {elapsed:7.3f}s  ({rate:7.1f} Msamples/s, "
            f"mean rel. error {mean_rel_error:.2e})"
        )
    if len(timings) == 2:
        print(f"  speedup: {timings['numpy'] / timings['compiled']:.2f}x")


if __name__ == "__main__":
    main()
