"""Named, reproducible random streams derived from a single master seed."""

from __future__ import annotations

import hashlib

import numpy as np


def _label_key(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFF
    digest = hashlib.blake2b(str(label).encode("utf-8"), digest_size=4).digest()
    return int.from_bytes(digest, "little")


def seed_sequence(master: int, *labels) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master), spawn_key=tuple(_label_key(x) for x in labels))


def stream(master: int, *labels) -> np.random.Generator:
    """Generator for the stream named by ``labels`` under ``master``.

    Streams with different labels are statistically independent, and the
    same (master, labels) pair always yields the same draws.
    """
    return np.random.Generator(np.random.PCG64(seed_sequence(master, *labels)))


def derive_seed(master: int, *labels) -> int:
    """A plain integer seed for a child stage (e.g. a train or eval phase)."""
    return int(seed_sequence(master, *labels).generate_state(1, dtype=np.uint32)[0])
