"""Seeded random number streams.

Every random draw in the package comes from a PCG64 generator keyed by a
64-bit seed and an integer sub-stream key:

    Generator(PCG64(SeedSequence(seed, spawn_key=key)))

Sub-stream keys in use, so that independent draws stay independent and
reproduce across runs and platforms:

    (0, k)  MEM innovation stream for series k
    (1, k)  tick price path for instrument stream k
    (2, i)  optimizer start perturbation i
"""
from __future__ import annotations

import numpy as np

STREAM_MEM = 0
STREAM_TICKS = 1
STREAM_STARTS = 2


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for one documented sub-stream of ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
