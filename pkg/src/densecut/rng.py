"""Deterministic seed derivation.

All randomness in the package flows from a single 64-bit master seed.
Component seeds are derived by hashing the master seed together with
string labels, so independent components never share a stream and runs
are reproducible across platforms.
"""

from __future__ import annotations

import hashlib
import random

import numpy as np


def derive_seed(master: int, *labels) -> int:
    """Derive a 64-bit child seed from a master seed and labels."""
    h = hashlib.sha256()
    h.update(str(int(master)).encode())
    for lab in labels:
        h.update(b"/")
        h.update(str(lab).encode())
    return int.from_bytes(h.digest()[:8], "little")


def make_random(master: int, *labels) -> random.Random:
    return random.Random(derive_seed(master, *labels))


def make_np(master: int, *labels) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *labels))
