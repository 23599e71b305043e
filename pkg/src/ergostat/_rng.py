"""Deterministic counter-based RNG substreams.

Every stochastic routine derives its generator from
``substream(seed, module_id, *indices)``.  Philox is counter-based, so
streams keyed by distinct index tuples are independent by construction
and results never depend on worker count or scheduling order.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# stable per-module stream ids; never renumber
MEASURE = 1
RETURN_STATS = 2
CHENSTEIN = 3
SHORT_RETURNS = 4
EVL = 5
CORRELATIONS = 6
CLI = 7


def substream(seed: int, *ids: int) -> np.random.Generator:
    """Generator for the (seed, *ids) substream."""
    key = np.random.SeedSequence([int(seed) & MASK64, *[int(i) for i in ids]])
    return np.random.Generator(np.random.Philox(key=key.generate_state(2, np.uint64)))


def bit_matrix(seed: int, ids: tuple[int, ...], m: int, nwords: int) -> np.ndarray:
    """(m, nwords) uint64 matrix; row i comes from substream (seed, *ids, i).

    Rows are the raw bit supply for exact binary-shift orbits; generating
    them per sample keeps parallel runs reproducible for any worker count.
    """
    out = np.empty((m, nwords), dtype=np.uint64)
    for i in range(m):
        out[i] = substream(seed, *ids, i).integers(0, 1 << 64, size=nwords, dtype=np.uint64)
    return out
