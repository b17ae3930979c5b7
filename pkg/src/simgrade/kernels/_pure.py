"""Pure-Python reference implementations of the hot kernels.

These mirror the Cython versions in ``_speedups.pyx`` step for step: same
update order, same splitmix64 random stream. They exist so the package works
without a compiler, and as a readable reference for what the compiled code
does. Expect them to be orders of magnitude slower.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "pure"
MASK64 = (1 << 64) - 1

_INV_2_53 = 1.0 / 9007199254740992.0  # 2^-53


def splitmix64_next(state: int) -> tuple[int, int]:
    """One step of the splitmix64 generator: (new_state, 64-bit output)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z = z ^ (z >> 31)
    return state, z


def sgns_train(
    words,
    offsets,
    w_in,
    w_out,
    neg_table,
    window: int,
    negatives: int,
    epochs: int,
    lr: float,
    seed: int,
) -> None:
    """Skip-gram with negative sampling, SGD, in place on w_in/w_out.

    words/offsets encode the corpus as a flat int32 token-index array plus
    sentence boundaries (offsets[s]..offsets[s+1]). neg_table is the unigram^0.75
    sampling table. One (center, context) pair trains the positive target plus
    up to `negatives` sampled negatives; a negative equal to the context token
    is skipped rather than redrawn.
    """
    state = seed & MASK64
    tsize = len(neg_table)
    n_sent = len(offsets) - 1
    for _ in range(epochs):
        for s in range(n_sent):
            lo = int(offsets[s])
            hi = int(offsets[s + 1])
            for i in range(lo, hi):
                center = int(words[i])
                v = w_in[center]
                jlo = max(lo, i - window)
                jhi = min(hi, i + window + 1)
                for j in range(jlo, jhi):
                    if j == i:
                        continue
                    context = int(words[j])
                    grad_v = np.zeros_like(v)
                    for k in range(negatives + 1):
                        if k == 0:
                            target = context
                            label = 1.0
                        else:
                            state, z = splitmix64_next(state)
                            target = int(neg_table[z % tsize])
                            if target == context:
                                continue
                            label = 0.0
                        u = w_out[target]
                        f = float(np.dot(v, u))
                        if f > 30.0:
                            sig = 1.0
                        elif f < -30.0:
                            sig = 0.0
                        else:
                            sig = 1.0 / (1.0 + math.exp(-f))
                        g = (label - sig) * lr
                        grad_v += g * u
                        w_out[target] = u + g * v
                    w_in[center] = v + grad_v
                    v = w_in[center]


def _dist2d(xs, ys, a, b) -> float:
    # sqrt(dx*dx + dy*dy) rather than math.hypot: the compiled twin computes
    # the same expression, and the two lanes must round identically so their
    # accept/reject decisions stay in lockstep
    dx = xs[a] - xs[b]
    dy = ys[a] - ys[b]
    return math.sqrt(dx * dx + dy * dy)


def _cycle_length(tour, xs, ys) -> float:
    total = 0.0
    n = len(tour)
    for i in range(n):
        total += _dist2d(xs, ys, tour[i], tour[(i + 1) % n])
    return total


def anneal_tour(
    xs,
    ys,
    n_iters: int,
    initial_temp: float,
    cooling: float,
    seed: int,
):
    """Simulated-annealing TSP tour over 2-D points with 2-opt proposals.

    Returns the best tour seen, as an int32 index array. For n <= 3 every
    cyclic order has the same length, so the identity tour is returned.
    """
    n = len(xs)
    tour = np.arange(n, dtype=np.int32)
    if n <= 3:
        return tour
    state = seed & MASK64

    def dist(a, b):
        return _dist2d(xs, ys, a, b)

    cur_len = _cycle_length(tour, xs, ys)
    best = tour.copy()
    best_len = cur_len
    temp = initial_temp
    for _ in range(n_iters):
        state, z1 = splitmix64_next(state)
        i = z1 % n
        state, z2 = splitmix64_next(state)
        j = z2 % n
        if i > j:
            i, j = j, i
        # reversing tour[i+1..j] swaps edges (i,i+1) and (j,j+1)
        if i != j and not (i == 0 and j == n - 1):
            a = int(tour[i])
            b = int(tour[i + 1])
            c = int(tour[j])
            d = int(tour[(j + 1) % n])
            delta = dist(a, c) + dist(b, d) - dist(a, b) - dist(c, d)
            accept = delta < 0.0
            if not accept:
                state, z3 = splitmix64_next(state)
                u = (z3 >> 11) * _INV_2_53
                if temp > 0.0 and u < math.exp(-delta / temp):
                    accept = True
            if accept:
                tour[i + 1 : j + 1] = tour[i + 1 : j + 1][::-1]
                cur_len += delta
                if cur_len < best_len:
                    best_len = cur_len
                    best = tour.copy()
        temp *= cooling
    return best
