"""Compare the numpy and compiled rollout kernels on planner-sized batches.

Usage: python benchmarks/bench_backends.py [--samples 500] [--horizon 20]
       [--neighbors 9] [--repeat 50]

Reports per-call wall time for each backend and the largest cost deviation
between them on identical inputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from safenav._core import rollouts_np

try:
    from safenav._core import _rollouts as compiled
except ImportError:
    compiled = None


def make_batch(rng, K, T, J):
    x0 = np.array([0.0, 0.0, 0.3])
    controls = np.stack([rng.uniform(-1.0, 1.0, size=(K, T)),
                         rng.uniform(-2.0, 2.0, size=(K, T))], axis=2)
    nb_pos = rng.uniform(-4.0, 4.0, size=(T + 1, J, 2))
    nb_buf = rng.uniform(0.0, 0.4, size=(T + 1, J))
    weights = np.array([20.0, 2.0, 3.0, 1e3, 0.05])
    return (np.ascontiguousarray(x0), np.ascontiguousarray(controls),
            np.array([4.0, 1.0]), np.array([2.0, 0.5]),
            np.ascontiguousarray(nb_pos), np.ascontiguousarray(nb_buf),
            weights, 0.6, 0.7, 0.4, 0.1)


def time_kernel(fn, batches, repeat):
    fn(*batches[0])  # warm up
    start = time.perf_counter()
    for k in range(repeat):
        fn(*batches[k % len(batches)])
    return (time.perf_counter() - start) / repeat


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=500)
    parser.add_argument("--horizon", type=int, default=20)
    parser.add_argument("--neighbors", type=int, default=9)
    parser.add_argument("--repeat", type=int, default=50)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    batches = [make_batch(rng, args.samples, args.horizon, args.neighbors)
               for _ in range(5)]

    t_np = time_kernel(rollouts_np.rollout_costs, batches, args.repeat)
    print(f"numpy    : {t_np * 1e3:8.3f} ms/call "
          f"(K={args.samples}, T={args.horizon}, J={args.neighbors})")

    if compiled is None:
        print("compiled : extension not built")
        return 0

    t_c = time_kernel(compiled.rollout_costs, batches, args.repeat)
    print(f"compiled : {t_c * 1e3:8.3f} ms/call  ({t_np / t_c:.1f}x faster)")

    worst = 0.0
    for b in batches:
        ref = np.asarray(rollouts_np.rollout_costs(*b))
        fast = np.asarray(compiled.rollout_costs(*b))
        denom = np.maximum(1.0, np.abs(ref))
        worst = max(worst, float(np.max(np.abs(fast - ref) / denom)))
    print(f"max relative deviation: {worst:.3e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
