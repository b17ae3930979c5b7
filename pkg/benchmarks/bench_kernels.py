"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--quick]

Both lanes run the same algorithms on the same random streams, so the outputs
agree; the point of this script is the wall-clock ratio.
"""

import argparse
import time

import numpy as np

from simgrade.kernels import _pure

try:
    from simgrade.kernels import _speedups
except ImportError:
    _speedups = None


def time_call(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_sgns(impl, n_tokens, vocab_size, dim, epochs, seed=0):
    rng = np.random.default_rng(seed)
    words = rng.integers(0, vocab_size, n_tokens).astype(np.int32)
    offsets = np.array([0, n_tokens], dtype=np.int32)
    neg_table = rng.integers(0, vocab_size, 1 << 14).astype(np.int32)

    def run():
        w_in = rng.uniform(-0.01, 0.01, (vocab_size, dim))
        w_out = np.zeros((vocab_size, dim))
        impl.sgns_train(words, offsets, w_in, w_out, neg_table, 5, 5, epochs, 0.025, 1)

    return time_call(run, repeat=1)


def bench_anneal(impl, n_points, n_iters, seed=0):
    rng = np.random.default_rng(seed)
    xs = np.ascontiguousarray(rng.uniform(0, 1, n_points))
    ys = np.ascontiguousarray(rng.uniform(0, 1, n_points))
    return time_call(impl.anneal_tour, xs, ys, n_iters, 1.0, 0.9995, 7)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true",
                        help="smaller workloads for a fast smoke run")
    args = parser.parse_args()

    if args.quick:
        sgns_args = (2_000, 50, 25, 1)
        anneal_args = (40, 20_000)
    else:
        sgns_args = (20_000, 50, 50, 2)
        anneal_args = (60, 200_000)

    lanes = [("pure", _pure)]
    if _speedups is not None:
        lanes.append(("cython", _speedups))
    else:
        print("compiled extension not available; benchmarking pure lane only")

    print(f"{'kernel':<12} {'lane':<8} {'seconds':>10}")
    results = {}
    for name, impl in lanes:
        t = bench_sgns(impl, *sgns_args)
        results[("sgns", name)] = t
        print(f"{'sgns_train':<12} {name:<8} {t:>10.3f}")
    for name, impl in lanes:
        t = bench_anneal(impl, *anneal_args)
        results[("anneal", name)] = t
        print(f"{'anneal_tour':<12} {name:<8} {t:>10.3f}")

    if _speedups is not None:
        for kernel in ("sgns", "anneal"):
            ratio = results[(kernel, "pure")] / results[(kernel, "cython")]
            print(f"{kernel}: compiled is {ratio:.0f}x faster")


if __name__ == "__main__":
    main()
