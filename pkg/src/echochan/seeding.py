"""Deterministic RNG substreams.

All randomness in the package flows through PCG64 generators keyed by
``SeedSequence(seed, spawn_key=path)``. A fixed integer path identifies
every consumer, so any part of a run can be regenerated in isolation and
parallel execution cannot change the drawn values.

Substream registry (path prefix -> consumer):

==============  =====================================================
``(0, k)``      reservoir matrices of a build: k=0 w_in, k=1 w, k=2 w_fb
``(1, i, 0)``   payload bits of dataset sequence i
``(1, i, 1)``   channel randomness of dataset sequence i
``(2, 0)``      channel tap modulation phases within apply_channel
``(2, 1)``      additive noise within apply_channel
``(3,)``        train/test sequence split
``(4, ...)``    sweep cells (value index, dataset index, repeat)
``(5, ...)``    transfer repeats
==============  =====================================================
"""

from __future__ import annotations

import numpy as np

STREAM_W_IN = 0
STREAM_W = 1
STREAM_W_FB = 2

STREAM_SEQUENCE = 1
STREAM_BITS = 0
STREAM_CHANNEL = 1

STREAM_PHASES = 0
STREAM_NOISE = 1

STREAM_SPLIT = 3
STREAM_SWEEP = 4
STREAM_TRANSFER = 5


def substream(seed: int, *path: int) -> np.random.Generator:
    """PCG64 generator for the substream of ``seed`` addressed by ``path``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(path)))


def child_seed(seed: int, *path: int) -> int:
    """Derived 64-bit integer seed for handing a substream to another API."""
    state = np.random.SeedSequence(seed, spawn_key=tuple(path)).generate_state(1, np.uint64)
    return int(state[0])
