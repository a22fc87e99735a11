"""Seed derivation for reproducible simulations.

Every stochastic operation builds its own generator from the run seed plus a
tuple of keys describing the operation (device id, frequency, run index, ...).
Results therefore do not depend on call order or on how work is scheduled.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

_MASK64 = (1 << 64) - 1


def _key_word(key) -> int:
    if isinstance(key, bool):
        return int(key)
    if isinstance(key, (int, np.integer)):
        return int(key) & _MASK64
    if isinstance(key, (float, np.floating)):
        return struct.unpack("<Q", struct.pack("<d", float(key)))[0]
    data = str(key).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def derive_rng(seed: int, *keys) -> np.random.Generator:
    """Return a PCG64 generator keyed on ``seed`` and ``keys``."""
    words = [int(seed) & _MASK64] + [_key_word(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))
