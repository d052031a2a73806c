"""Stable seed derivation.

Python's builtin hash() is salted per process, so derived seeds go through
blake2b instead. Same parts -> same seed, on any platform, in any process.
"""

from __future__ import annotations

import hashlib


def derive_seed(*parts: object) -> int:
    """Derive a 63-bit seed from an arbitrary mix of strings and ints."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") & (2**63 - 1)
