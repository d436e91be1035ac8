"""Deterministic seed derivation.

A child seed is ``SeedSequence(entropy=root, spawn_key=keys)`` reduced to a
63-bit integer, where string keys are first mapped through CRC-32. Streams
keyed by different tuples are independent, so adding a key (for example a
new method name) never shifts the streams of existing keys.
"""

import zlib

import numpy as np


def _key(k) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    k = int(k)
    if k < 0:
        raise ValueError("seed keys must be non-negative")
    return k


def derive_seed(root: int, *keys) -> int:
    ss = np.random.SeedSequence(entropy=int(root), spawn_key=tuple(_key(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
