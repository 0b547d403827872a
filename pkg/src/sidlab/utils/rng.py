"""Counter-based random streams.

Streams are keyed by a hash of (seed, indices..., purpose) so the numbers a
task draws do not depend on which worker runs it or in what order.
"""

from __future__ import annotations

import hashlib

import numpy as np

PURPOSES = frozenset(
    {"simulate", "init", "campaign", "couple", "probe", "shadow", "stationary", "toychain",
     "gronwall", "sample"}
)


def derive_key(seed: int, *indices: int, purpose: str = "simulate") -> int:
    """128-bit Philox key for a (seed, indices, purpose) tuple."""
    if purpose not in PURPOSES:
        raise ValueError(f"Unknown stream purpose: {purpose}")
    payload = ":".join([purpose, str(int(seed)), *(str(int(i)) for i in indices)])
    digest = hashlib.blake2b(payload.encode("ascii"), digest_size=16).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, *indices: int, purpose: str = "simulate") -> np.random.Generator:
    """Independent generator for one task.

    Example:
        >>> rng = stream(7, 2, 15, purpose="campaign")
    """
    return np.random.Generator(np.random.Philox(key=derive_key(seed, *indices, purpose=purpose)))
