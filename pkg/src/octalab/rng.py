"""Seeded, counter-based random streams.

Every consumer derives its generator from ``(seed, *stream_key)``, so results
do not depend on how work is scheduled across processes.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return a Philox generator keyed by ``seed`` and an integer path."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *[int(k) for k in key]])
    return np.random.Generator(np.random.Philox(ss))
