"""Seeding conventions.

All randomness goes through numpy's PCG64 bit generator seeded by a
``SeedSequence``; draws for token sampling are ``Generator.random()`` doubles
(53 random bits) consumed by an inverse-CDF search in token-id order. Derived
seeds come from BLAKE2b, which is stable across platforms and Python
versions (unlike ``hash``).
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def as_seed(seed: int) -> int:
    """Map any Python int (including negatives) onto the unsigned 64-bit range."""
    return int(seed) & MASK64


def make_rng(*keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([as_seed(k) for k in keys])))


def stream_rng(master_seed: int, stream_index: int) -> np.random.Generator:
    """Independent generator for one generation stream of a batch."""
    return make_rng(master_seed, stream_index)


def stable_hash(*parts: object) -> int:
    """64-bit BLAKE2b digest of the parts' ``str`` forms joined by NUL."""
    payload = "\x00".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")
