"""Small shared helpers: stable hashing for seeds and token hashing.

Python's builtin hash() is salted per process, so anything that must be
reproducible across runs (episode seeds, hashed token indices) goes
through blake2b instead.
"""

from __future__ import annotations

import hashlib

__all__ = ["stable_u64", "stable_seed"]


def stable_u64(data: str | bytes) -> int:
    """Deterministic 64-bit hash of a string or byte sequence."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "big")


def stable_seed(*parts) -> int:
    """Deterministic RNG seed derived from any printable parts."""
    return stable_u64("\x1f".join(str(p) for p in parts))
