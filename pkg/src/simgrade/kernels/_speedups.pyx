# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pure``.

Same algorithms, same splitmix64 random stream; see _pure.py for the readable
reference. Keep the two files in lockstep when changing either.
"""

from libc.math cimport exp, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"

cdef extern from *:
    """
    typedef unsigned long long u64;
    static inline u64 sm64_next(u64 *state, u64 *out) {
        u64 z = (*state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        *out = z ^ (z >> 31);
        return *out;
    }
    """
    ctypedef unsigned long long u64
    u64 sm64_next(u64 *state, u64 *out) nogil


cdef double _INV_2_53 = 1.0 / 9007199254740992.0


def sgns_train(
    int[::1] words,
    int[::1] offsets,
    double[:, ::1] w_in,
    double[:, ::1] w_out,
    int[::1] neg_table,
    int window,
    int negatives,
    int epochs,
    double lr,
    unsigned long long seed,
):
    """Skip-gram negative-sampling SGD, in place on w_in/w_out."""
    cdef u64 state = seed
    cdef u64 z
    cdef Py_ssize_t tsize = neg_table.shape[0]
    cdef Py_ssize_t n_sent = offsets.shape[0] - 1
    cdef Py_ssize_t dim = w_in.shape[1]
    cdef Py_ssize_t epoch, s, i, j, d
    cdef int k, center, context, target
    cdef long lo, hi, jlo, jhi
    cdef double f, sig, g, label
    grad_buf = np.zeros(dim, dtype=np.float64)
    cdef double[::1] grad_v = grad_buf

    with nogil:
        for epoch in range(epochs):
            for s in range(n_sent):
                lo = offsets[s]
                hi = offsets[s + 1]
                for i in range(lo, hi):
                    center = words[i]
                    jlo = i - window
                    if jlo < lo:
                        jlo = lo
                    jhi = i + window + 1
                    if jhi > hi:
                        jhi = hi
                    for j in range(jlo, jhi):
                        if j == i:
                            continue
                        context = words[j]
                        for d in range(dim):
                            grad_v[d] = 0.0
                        for k in range(negatives + 1):
                            if k == 0:
                                target = context
                                label = 1.0
                            else:
                                sm64_next(&state, &z)
                                target = neg_table[z % <u64>tsize]
                                if target == context:
                                    continue
                                label = 0.0
                            f = 0.0
                            for d in range(dim):
                                f += w_in[center, d] * w_out[target, d]
                            if f > 30.0:
                                sig = 1.0
                            elif f < -30.0:
                                sig = 0.0
                            else:
                                sig = 1.0 / (1.0 + exp(-f))
                            g = (label - sig) * lr
                            for d in range(dim):
                                grad_v[d] += g * w_out[target, d]
                                w_out[target, d] += g * w_in[center, d]
                        for d in range(dim):
                            w_in[center, d] += grad_v[d]


cdef inline double _dist(double[::1] xs, double[::1] ys, Py_ssize_t a, Py_ssize_t b) nogil:
    cdef double dx = xs[a] - xs[b]
    cdef double dy = ys[a] - ys[b]
    return sqrt(dx * dx + dy * dy)


def anneal_tour(
    double[::1] xs,
    double[::1] ys,
    long n_iters,
    double initial_temp,
    double cooling,
    unsigned long long seed,
):
    """Simulated-annealing TSP tour with 2-opt proposals; returns best tour."""
    cdef Py_ssize_t n = xs.shape[0]
    tour_arr = np.arange(n, dtype=np.int32)
    if n <= 3:
        return tour_arr
    best_arr = tour_arr.copy()
    cdef int[::1] tour = tour_arr
    cdef int[::1] best = best_arr
    cdef u64 state = seed
    cdef u64 z1, z2, z3
    cdef double cur_len = 0.0, best_len, temp, delta, u
    cdef Py_ssize_t it, i, j, lo, hi, m
    cdef int a, b, c, d, tmp
    cdef bint accept

    with nogil:
        for i in range(n):
            cur_len += _dist(xs, ys, tour[i], tour[(i + 1) % n])
        best_len = cur_len
        temp = initial_temp
        for it in range(n_iters):
            sm64_next(&state, &z1)
            i = <Py_ssize_t>(z1 % <u64>n)
            sm64_next(&state, &z2)
            j = <Py_ssize_t>(z2 % <u64>n)
            if i > j:
                m = i
                i = j
                j = m
            if i != j and not (i == 0 and j == n - 1):
                a = tour[i]
                b = tour[i + 1]
                c = tour[j]
                d = tour[(j + 1) % n]
                delta = (
                    _dist(xs, ys, a, c)
                    + _dist(xs, ys, b, d)
                    - _dist(xs, ys, a, b)
                    - _dist(xs, ys, c, d)
                )
                accept = delta < 0.0
                if not accept:
                    sm64_next(&state, &z3)
                    u = (z3 >> 11) * _INV_2_53
                    if temp > 0.0 and u < exp(-delta / temp):
                        accept = True
                if accept:
                    lo = i + 1
                    hi = j
                    while lo < hi:
                        tmp = tour[lo]
                        tour[lo] = tour[hi]
                        tour[hi] = tmp
                        lo += 1
                        hi -= 1
                    cur_len += delta
                    if cur_len < best_len:
                        best_len = cur_len
                        for m in range(n):
                            best[m] = tour[m]
            temp *= cooling
    return best_arr
