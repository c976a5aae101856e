"""Deterministic random-stream derivation.

Every random quantity in the package is drawn from a stream derived by
hashing a 64-bit root seed together with a purpose label and optional
integer indices.  Streams with different labels/indices are disjoint by
construction (counter-based Philox keys), so e.g. process noise and label
noise never share randomness, and experiment cells can be generated in
any order or in parallel with identical results.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_key", "stream"]


def derive_key(root_seed: int, label: str, *indices: int) -> int:
    """128-bit stream key from (root seed, purpose label, indices)."""
    h = hashlib.blake2b(digest_size=16)
    h.update(int(root_seed).to_bytes(16, "little", signed=True))
    h.update(label.encode("utf-8"))
    for ix in indices:
        h.update(b"\x00")
        h.update(int(ix).to_bytes(16, "little", signed=True))
    return int.from_bytes(h.digest(), "little")


def stream(root_seed: int, label: str, *indices: int) -> np.random.Generator:
    """Independent generator for the given (seed, label, indices) triple.

    Philox is counter-based: the same key always yields the same sequence,
    and draws are a prefix-stable function of the key, so asking for fewer
    or more variates never changes the leading values.
    """
    key = derive_key(root_seed, label, *indices)
    return np.random.Generator(np.random.Philox(key=key))
