"""Deterministic random-stream addressing.

All sampling in this package is driven by numpy Generators obtained from
`substream`.  A stream is addressed by a base seed plus a path of labels
(strings or integers), so independent parts of an experiment (per-device
channels, per-draw trial noise, baselines, ...) own non-overlapping streams
regardless of execution order or parallelism.
"""

from __future__ import annotations

import numpy as np

_LABEL_SPACE = 2**31


def _encode(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"stream labels must be nonnegative, got {part}")
        return int(part)
    # stable string hash (Python's hash() is salted per process)
    h = 0
    for ch in str(part).encode("utf-8"):
        h = (h * 131 + ch) % _LABEL_SPACE
    return h


def substream(seed: int, *path) -> np.random.Generator:
    """Return a Generator for the stream addressed by ``(seed, *path)``.

    The same address always yields the same stream; distinct addresses yield
    statistically independent streams (SeedSequence entropy pooling).
    """
    entropy = (int(seed),) + tuple(_encode(p) for p in path)
    return np.random.default_rng(np.random.SeedSequence(entropy))
