"""Deterministic substreams from a counter-based generator.

Every random quantity in the library is drawn from a Philox (counter-based,
splittable) stream keyed by a user seed plus a label path, so stream n is
independent of how many streams were requested and any prefix of an
experiment is reproducible bit-exactly.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _component_bytes(component) -> bytes:
    if isinstance(component, (bool, float)):
        raise TypeError(f"stream path components must be int or str, got {component!r}")
    if isinstance(component, (int, np.integer)):
        return b"i" + int(component).to_bytes(16, "little", signed=True)
    if isinstance(component, str):
        return b"s" + component.encode("utf-8") + b"\x00"
    raise TypeError(f"stream path components must be int or str, got {component!r}")


def stream_key(*path) -> int:
    """Stable 64-bit key for a label path (blake2b, platform independent)."""
    h = hashlib.blake2b(digest_size=8)
    for component in path:
        h.update(_component_bytes(component))
    return int.from_bytes(h.digest(), "little")


def substream(seed: int, *path) -> np.random.Generator:
    """Independent generator for (seed, path).

    The Philox key is (seed, hash(path)); identical inputs give identical
    streams on every platform and regardless of what other streams exist.
    """
    key = np.array([int(seed) & _MASK64, stream_key(*path)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
