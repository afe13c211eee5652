"""Deterministic random-number streams.

All randomness in the package flows from a single root seed. Stage-level
generators are derived by hashing the root seed together with string labels,
so any stage can be re-run in isolation and always sees the same stream.
Philox is counter-based, which keeps the streams stable across platforms.
"""

import hashlib

import numpy as np

__all__ = ["derive_seed", "make_rng"]


def derive_seed(root_seed: int, *labels: object) -> int:
    """Derive a child seed from ``root_seed`` and a sequence of labels."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(root_seed)).encode())
    for label in labels:
        h.update(b"\x1f")
        h.update(str(label).encode())
    return int.from_bytes(h.digest(), "little")


def make_rng(root_seed: int, *labels: object) -> np.random.Generator:
    """Generator for the stream identified by ``root_seed`` and ``labels``."""
    return np.random.Generator(np.random.Philox(key=derive_seed(root_seed, *labels)))
