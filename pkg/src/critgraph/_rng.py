"""Seeding helpers shared by all samplers.

Every sampler in this package takes either an integer seed or a
``numpy.random.Generator``.  Replica farms derive independent streams from a
master seed keyed by the replica index, so results do not depend on thread
scheduling.
"""

from __future__ import annotations

import numpy as np

__all__ = ["ensure_rng", "replica_rng", "randbelow"]


def ensure_rng(seed_or_rng) -> np.random.Generator:
    """Return a Generator, passing one through untouched."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(np.random.SeedSequence(seed_or_rng))


def replica_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for replica `index` of a run with master `seed`.

    Keyed by (seed, index) only, so a farm with any thread count produces
    identical per-replica output.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def randbelow(rng: np.random.Generator, n: int) -> int:
    """Exact uniform integer in [0, n) for arbitrary-precision n.

    Draws 63-bit chunks and rejects overshoot, so no modulo bias even when n
    exceeds 64 bits (acceptance tests of the tilted sampler rely on this).
    """
    if n <= 0:
        raise ValueError("randbelow needs n >= 1")
    if n <= 1 << 63:
        # numpy's bounded integers are already exact (Lemire rejection)
        return int(rng.integers(0, n))
    k = (int(n) - 1).bit_length()
    chunks = (k + 62) // 63
    while True:
        x = 0
        for _ in range(chunks):
            x = (x << 63) | int(rng.integers(0, 1 << 63))
        x >>= chunks * 63 - k if k else 0
        if x < n:
            return x
