#!/usr/bin/env python3
"""Wall-time comparison of the three ranking back-ends.

Measures ranking time over growing sample counts at fixed width, echoing
the qualitative cost ordering ARR < LS < TB (relevance/redundancy is one
matrix product, the Laplacian score pays for an m x m distance matrix, and
tree importance pays for a hundred forests... well, trees).
"""

import argparse
import time

import numpy as np

import stablefs as sf


def best_of(fn, reps):
    fn()  # warm-up
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-features", type=int, default=500)
    parser.add_argument("--sample-counts", type=int, nargs="+",
                        default=[8, 16, 32, 64, 128, 256, 512, 1024])
    parser.add_argument("--reps", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    max_m = max(args.sample_counts)
    values = rng.random((max_m, args.n_features))
    ids = tuple(sf.FeatureId(j, f"f{j:04d}") for j in range(args.n_features))
    full = sf.DesignMatrix(values=values, feature_ids=ids, targets=rng.random(max_m) + 0.5)

    print(f"n = {args.n_features} features, best of {args.reps} runs")
    print(f"{'m':>6} {'arr (ms)':>10} {'ls (ms)':>10} {'tb (ms)':>10}")
    for m in args.sample_counts:
        matrix = sf.prefix(full, m)
        t_arr = best_of(lambda: sf.arr_rank(matrix), args.reps)
        t_ls = best_of(lambda: sf.ls_rank(matrix), args.reps)
        t_tb = best_of(lambda: sf.tb_rank(matrix, seed=args.seed), args.reps)
        print(f"{m:>6} {t_arr * 1e3:>10.1f} {t_ls * 1e3:>10.1f} {t_tb * 1e3:>10.1f}")


if __name__ == "__main__":
    main()
