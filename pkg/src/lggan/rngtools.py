"""Seed handling: one 64-bit experiment seed, split into independent
per-purpose streams by label so subsystems stay reproducible in isolation."""

import hashlib

import numpy as np


def split_rng(seed: int, label: str = "") -> np.random.Generator:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF] + words)
