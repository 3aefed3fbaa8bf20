"""Indexed random substreams.

Every stochastic unit (replication, bootstrap replicate, redraw attempt,
X or C draw) gets its own Philox generator keyed by its position in the
experiment, so results never depend on execution order.
"""
from __future__ import annotations

import os

import numpy as np

__all__ = ["STREAM_X", "STREAM_C", "STREAM_BOOT", "substream", "derive_seed", "resolve_workers"]

STREAM_X = 0
STREAM_C = 1
STREAM_BOOT = 2

THREADS_ENV = "CENSTAIL_THREADS"


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the node ``key`` below ``seed`` in the spawn tree."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(x) for x in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *key: int) -> int:
    """A 64-bit integer seed for the node ``key`` below ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(x) for x in key))
    return int(ss.generate_state(1, np.uint64)[0])


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(workers))
