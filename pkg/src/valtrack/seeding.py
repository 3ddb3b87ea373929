"""Hashed, order-independent random streams."""
from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, (int, np.integer)) and part >= 0:
        return int(part)
    return zlib.crc32(str(part).encode())


def stream_seed(master: int, *parts) -> np.random.SeedSequence:
    """SeedSequence identified by the master seed and a tuple of labels."""
    return np.random.SeedSequence(int(master), spawn_key=tuple(_key(p) for p in parts))


def child(seed: np.random.SeedSequence, *parts) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(_key(p) for p in parts))


def generator(seed) -> np.random.Generator:
    return np.random.default_rng(seed)
