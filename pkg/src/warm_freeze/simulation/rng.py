"""Deterministic random substreams.

All randomness in data generation and training flows through :func:`substream`.
A stream is keyed by ``(global_seed, key, purpose)`` and derived with
``numpy.random.SeedSequence`` spawn keys, so the bits a caller receives never
depend on generation order, worker count or what other streams were drawn.
"""

from __future__ import annotations

import zlib

import numpy as np


def purpose_code(purpose: str) -> int:
    """Stable non-negative integer tag for a purpose string."""
    return zlib.crc32(purpose.encode("utf-8"))


def substream(global_seed: int, key: int, purpose: str) -> np.random.Generator:
    """Derive an independent generator for one (seed, key, purpose) triple.

    Args:
        global_seed: Run-level seed
        key: Per-item counter, e.g. a snippet id or an epoch index
        purpose: Tag separating independent uses of the same key

    Returns:
        A PCG64-backed generator
    """
    if global_seed < 0 or key < 0:
        raise ValueError(f"seed and key must be non-negative, got {global_seed}, {key}")
    seq = np.random.SeedSequence(entropy=global_seed, spawn_key=(key, purpose_code(purpose)))
    return np.random.Generator(np.random.PCG64(seq))


def seed_path(global_seed: int, key: int, purpose: str) -> str:
    """Human-readable tag recorded alongside generated artifacts."""
    return f"{global_seed}/{key}/{purpose}"
