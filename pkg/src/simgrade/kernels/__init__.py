"""Hot numeric kernels with a compiled core and a pure-Python fallback.

The compiled extension (``simgrade.kernels._speedups``, built from Cython) is
preferred; if it is missing, or the SIMGRADE_PURE_KERNELS environment variable
is set, the pure-Python twin in ``_pure`` is used instead. Both lanes run the
same algorithm on the same splitmix64 random stream, so results agree to
floating-point noise (and exactly, for the annealing kernel); within one lane
a fixed seed reproduces bit-identical output.

Run ``python benchmarks/bench_kernels.py`` for a speed comparison.
"""

import os

from ._pure import MASK64, splitmix64_next

if os.environ.get("SIMGRADE_PURE_KERNELS"):
    from . import _pure as _impl
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on build environment
        from . import _pure as _impl

BACKEND = _impl.BACKEND
sgns_train = _impl.sgns_train
anneal_tour = _impl.anneal_tour


def derive_seed(seed: int, *salts: int) -> int:
    """Mix salts into a base seed, giving independent 64-bit child seeds."""
    state = seed & MASK64
    for salt in salts:
        state, _ = splitmix64_next(state)
        state ^= salt & MASK64
    state, out = splitmix64_next(state)
    return out
