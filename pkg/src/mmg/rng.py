"""Seeded random streams.

One game run owns exactly one generator. Ensembles derive one child seed
per run from a master seed via indexed spawn keys, so growing an ensemble
never disturbs the streams of runs already computed.
"""

from __future__ import annotations

import numpy as np

__all__ = ["game_rng", "subseed"]


def game_rng(seed: int) -> np.random.Generator:
    """PCG64 generator owned by a single game run."""
    return np.random.default_rng(np.random.SeedSequence(seed))


def subseed(master_seed: int, index: int) -> int:
    """64-bit seed of the index-th substream derived from ``master_seed``."""
    if index < 0:
        raise ValueError("substream index must be non-negative")
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])
