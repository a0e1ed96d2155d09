"""Seeded, splittable random streams.

Every ensemble draws from a PCG64 generator derived from a ``SeedSequence``
with an explicit root seed and a spawn key, so substreams for different
experiment cells never depend on execution order.
"""
from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, *key) -> np.random.Generator:
    """Generator for substream ``key`` of ``seed``; string key parts are hashed with CRC32."""
    spawn_key = tuple(zlib.crc32(k.encode()) if isinstance(k, str) else int(k) for k in key)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=spawn_key)))


def uniform_parameters(rng: np.random.Generator, size: int, m: int) -> np.ndarray:
    """``size`` points uniform on the half-open torus ``[0, 2 pi)^m``."""
    return rng.uniform(0.0, 2 * np.pi, size=(size, m))
