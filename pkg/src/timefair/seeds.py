"""Deterministic seed derivation (documented so third parties can replay).

Scheme id ``blake2b64+splitmix64/v1``:

1. Join the inputs into the ASCII key
   ``"{master_seed}|{algorithm_id}|{instance_id}|{repetition}|{run_index}"``.
2. Hash the key with BLAKE2b (8-byte digest), read big-endian as u64.
3. Apply the splitmix64 finalizer to the hash.

Restart sub-seeds inside one run come from the splitmix64 output stream
seeded by the run seed, so a restarted optimizer never replays the inner
sequence.
"""

from __future__ import annotations

import hashlib

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

SEED_SCHEME_ID = "blake2b64+splitmix64/v1"


def splitmix64(z: int) -> int:
    """The splitmix64 finalizer (Steele, Lea & Flood mixing constants)."""
    z = (z + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(
    master_seed: int,
    algorithm_id: str,
    instance_id: str,
    repetition_index: int,
    run_index: int,
) -> int:
    """Collision-resistant 64-bit seed for one run of the restart loop."""
    key = f"{master_seed}|{algorithm_id}|{instance_id}|{repetition_index}|{run_index}"
    h = int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "big")
    return splitmix64(h)


def subseed(seed: int, index: int) -> int:
    """index-th output of the splitmix64 stream started at `seed`."""
    return splitmix64((seed + index * _GOLDEN) & _MASK)
