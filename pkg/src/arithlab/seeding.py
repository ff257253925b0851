"""Deterministic seed derivation for partitioned Monte-Carlo work.

Samplers split work into fixed-size chunks; chunk i always uses the
generator ``derive_rng(seed, i)``, so aggregates do not depend on how
chunks are assigned to workers.
"""

from __future__ import annotations

import numpy as np

DEFAULT_SEED = 271828
MC_CHUNK = 1 << 15


def as_seed(rng_or_seed) -> int:
    """Normalize an int seed or a Generator to a 63-bit seed."""
    if isinstance(rng_or_seed, (int, np.integer)):
        return int(rng_or_seed)
    if isinstance(rng_or_seed, np.random.Generator):
        return int(rng_or_seed.integers(0, 2**63))
    if rng_or_seed is None:
        return DEFAULT_SEED
    raise TypeError(f"expected seed or numpy Generator, got {type(rng_or_seed)!r}")


def derive_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for work chunk ``index`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def chunk_sizes(total: int, chunk: int = MC_CHUNK) -> list[int]:
    """Fixed partition of ``total`` items into chunks; last may be short."""
    sizes = [chunk] * (total // chunk)
    if total % chunk:
        sizes.append(total % chunk)
    return sizes
