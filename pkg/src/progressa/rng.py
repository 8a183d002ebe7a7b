"""Seed plumbing: one user-visible seed, named deterministic substreams."""

from __future__ import annotations

import hashlib

import numpy as np


def _name_entropy(name) -> int:
    digest = hashlib.blake2b(repr(name).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def substream(seed: int, *names) -> np.random.Generator:
    """Generator for the substream identified by `names` under `seed`.

    Independent of call order and of any other substream; stable across
    processes and platforms.
    """
    entropy = [int(seed)] + [_name_entropy(n) for n in names]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def spawn_seed(seed: int, *names) -> int:
    """Derived integer seed (for APIs that want a seed, not a Generator)."""
    return int(substream(seed, *names).integers(0, 2**63 - 1))
