"""Seed derivation for deterministic parallel generation.

Every random decision in the engine flows from a master seed through an
explicit route of labels and indices, e.g. ``derive_rng(seed, "sample", 17)``.
Workers never share generator state, so results are independent of worker
count and completion order; the same (seed, route) always yields the same
stream.
"""

from __future__ import annotations

import zlib

import numpy as np

_U64 = 0xFFFFFFFFFFFFFFFF


def _encode(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if isinstance(part, (int, np.integer)):
        return int(part) & _U64
    raise TypeError(f"rng route parts must be int or str, got {type(part).__name__}")


def derive_seed(master_seed: int, *route: int | str) -> int:
    """Fold a master seed plus a routing path into a single 64-bit seed."""
    ss = np.random.SeedSequence([_encode(master_seed), *(_encode(p) for p in route)])
    return int(ss.generate_state(1, np.uint64)[0])


def derive_rng(master_seed: int, *route: int | str) -> np.random.Generator:
    """Independent generator for the given route under the master seed."""
    return np.random.default_rng(derive_seed(master_seed, *route))
