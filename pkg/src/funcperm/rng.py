"""Keyed random-number substreams.

Every source of randomness in the package is derived from a user seed plus
an explicit integer key path (replication index, permutation index, draw
index, ...).  Streams with different key paths are statistically
independent, and the mapping (seed, key) -> stream is pure, so results do
not depend on the order in which streams are created or consumed.  This is
what makes parallel evaluation bit-reproducible.
"""

from __future__ import annotations

from typing import Union

import numpy as np

Seed = Union[int, tuple]


def seed_entropy(seed: Seed, *key: int) -> tuple[int, ...]:
    """Flatten ``seed`` and an integer key path into SeedSequence entropy."""
    parts = (seed,) if isinstance(seed, int) else tuple(seed)
    entropy = tuple(int(p) for p in parts) + tuple(int(k) for k in key)
    if any(p < 0 for p in entropy):
        raise ValueError("seed and key components must be nonnegative integers")
    return entropy


def substream(seed: Seed, *key: int) -> np.random.Generator:
    """Return the generator identified by ``(seed, *key)``."""
    return np.random.default_rng(np.random.SeedSequence(seed_entropy(seed, *key)))
