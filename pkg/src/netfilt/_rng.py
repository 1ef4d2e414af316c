"""Seed plumbing: one experiment seed, deterministic sub-streams per stage."""
from __future__ import annotations

import numpy as np

# stage codes, fixed forever so that adding a stage never shifts the others
GRAPH = 1
WEIGHTS = 2
TRAINING = 3
CV = 4
TEST = 5
TARGET = 6


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an int seed, or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, key...)``; stable across versions of the caller."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
