"""Named, independent random streams derived from one master seed."""
from __future__ import annotations

import zlib

import numpy as np

OUTCOMES_T = "outcomes_t"
OUTCOMES_C = "outcomes_c"
ASSIGNMENTS = "assignments"
MODEL_INIT = "model_init"
TRIPLETS = "triplets"
RANDOM_RANKER = "random_ranker"
SYNTHETIC_BASE = "synthetic_base"


def stream(seed: int, name: str, *index: int) -> np.random.Generator:
    """Generator for consumer ``name`` (and optional sub-indices) of ``seed``.

    Streams with different names or indices are statistically independent,
    so adding draws to one consumer never shifts another.
    """
    key = (zlib.crc32(name.encode()),) + tuple(int(k) for k in index)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))
