"""Seeded random streams.

Every stochastic routine takes an explicit :class:`numpy.random.Generator`.
Generators are always PCG64; independent child streams are derived with
:class:`numpy.random.SeedSequence` so results do not depend on execution
order or on how work is split across processes.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int | np.random.SeedSequence | None) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def child_seeds(seed: int, *path: int) -> np.random.SeedSequence:
    """Deterministic sub-stream addressed by an integer path, e.g. ``(h_index, restart)``."""
    return np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(p) for p in path))


def child_rng(seed: int, *path: int) -> np.random.Generator:
    return make_rng(child_seeds(seed, *path))
