"""Shared helpers: seeded substreams and stable hashing."""

from __future__ import annotations

import hashlib

import numpy as np


def _name_key(name: str) -> int:
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator derived from (seed, name); stable across runs."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), _name_key(name)]))


def spawn_rng(rng: np.random.Generator, name: str) -> np.random.Generator:
    child = int(rng.integers(0, 2**63 - 1))
    return substream(child, name)
