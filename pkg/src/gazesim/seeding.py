"""Stable per-recording seed derivation.

Seeds for corpus-level work are derived by hashing (master seed, labels)
so results do not depend on processing order or parallel schedule.
"""
from __future__ import annotations

import hashlib


def derive_seed(master_seed: int, *parts) -> int:
    """Derive a 64-bit seed from a master seed and any number of labels."""
    h = hashlib.sha256()
    h.update(str(int(master_seed)).encode("utf-8"))
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little")
