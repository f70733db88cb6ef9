"""Reproducible per-trajectory random streams.

Every trajectory draws from a counter-based Philox generator keyed on
(master seed, trajectory index).  Streams for distinct indices are
statistically independent and can be created in any order, which makes
ensemble output independent of scheduling and thread count.
"""

from __future__ import annotations

import numpy as np

__all__ = ["MAX_SEED", "trajectory_stream"]

MAX_SEED = 2**64 - 1


def trajectory_stream(master_seed: int, index: int) -> np.random.Generator:
    """Generator for trajectory `index` under `master_seed`.

    Args:
        master_seed: ensemble-level seed, 0 <= seed <= MAX_SEED.
        index: trajectory index, 0 <= index <= MAX_SEED.

    Returns:
        An independent numpy Generator; the same (seed, index) pair always
        yields the same stream.
    """
    for name, value in (("master_seed", master_seed), ("index", index)):
        if not isinstance(value, (int, np.integer)):
            raise ValueError(f"{name} must be an integer, got {value!r}")
        if value < 0 or value > MAX_SEED:
            raise ValueError(f"{name} must be in [0, 2^64), got {value!r}")
    key = np.array([master_seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
