"""Seeded random streams.

Every stream is a counter-based Philox generator keyed by ``(seed, *path)``,
so a round's randomness depends only on the session seed and the round
number, never on how many draws other rounds made or in which order they ran.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the substream ``path`` of ``seed``."""
    if seed < 0 or any(p < 0 for p in path):
        raise ValueError("seed and stream path must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(path))))
