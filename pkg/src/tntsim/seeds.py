"""Counter-based seed derivation.

A master seed fans out to sub-seeds through SHA-256 over (seed, purpose tag,
index), so adding a consumer never perturbs unrelated randomness.  Python's
builtin hash() is salted per process and must never be used for this.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive(master_seed: int, purpose: str, index: int = 0) -> int:
    """Stable 63-bit sub-seed for (master_seed, purpose, index)."""
    payload = b"%d\x00%s\x00%d" % (master_seed, purpose.encode("utf-8"), index)
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFFFFFFFFFFFFFF


def generator(seed: int) -> np.random.Generator:
    """The one RNG construction used everywhere."""
    return np.random.Generator(np.random.PCG64(seed))
