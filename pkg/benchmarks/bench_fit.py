"""Wall-clock timings for the hot paths: erm_fit, the Rademacher estimate and k-NN.

Run with ``python benchmarks/bench_fit.py [--repeat N]``.
"""

import argparse
import time

import numpy as np

from metricbounds import (FitOptions, LabeledDataset, LossSpec, erm_fit, knn_error,
                          rademacher_estimate, shuffled_pairs)


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    print(f"{'case':<46}{'best of ' + str(args.repeat):>14}")
    for D in (4, 54, 104, 204):
        X = rng.standard_normal((105, D))
        y = rng.integers(0, 3, 105)
        S = shuffled_pairs(X, y, np.random.default_rng(1), 10)
        opts = FitOptions(max_iters=500, patience=500)
        t = timed(lambda: erm_fit(S, LossSpec(0.2, 0, 5), 0.5, opts), args.repeat)
        print(f"{f'erm_fit D={D} m={S.m} 500 iters':<46}{t:>12.3f} s")

    for D, m in ((4, 128), (16, 128), (16, 1024)):
        diffs = rng.standard_normal((m, D))
        t = timed(lambda: rademacher_estimate(diffs, 2000), args.repeat)
        print(f"{f'rademacher_estimate D={D} m={m} 2000 draws':<46}{t:>12.3f} s")

    train = LabeledDataset(rng.standard_normal((1000, 204)), rng.integers(0, 3, 1000))
    test = LabeledDataset(rng.standard_normal((1000, 204)), rng.integers(0, 3, 1000))
    t = timed(lambda: knn_error(np.eye(204), train, test, 3), args.repeat)
    print(f"{'knn_error 1000x1000 D=204':<46}{t:>12.3f} s")


if __name__ == "__main__":
    main()
