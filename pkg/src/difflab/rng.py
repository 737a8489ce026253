"""Seed handling.

Every random stream is a ``numpy.random.Generator`` backed by Philox, a
counter-based bit generator. Streams are derived from one 64-bit root seed by
*labeled* splitting, so adding a new consumer never shifts the draws another
consumer sees, and by *indexed* splitting for per-chunk streams, so results do
not depend on the order in which chunks are evaluated.
"""

from __future__ import annotations

import zlib
from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


def _label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        seq = seed.bit_generator.seed_seq
        if not isinstance(seq, np.random.SeedSequence):
            raise TypeError("generator was not seeded from a SeedSequence")
        return seq
    return np.random.SeedSequence(seed)


def derive(seed: SeedLike, *labels: str | int) -> np.random.SeedSequence:
    """Child seed sequence identified by a path of labels or indices.

    ``derive(7, "sample", 3)`` always yields the same sequence, independent of
    any other stream derived from seed 7.
    """
    parent = seed_sequence(seed)
    key = tuple(_label_key(label) if isinstance(label, str) else int(label) for label in labels)
    return np.random.SeedSequence(entropy=parent.entropy, spawn_key=tuple(parent.spawn_key) + key)


def make_rng(seed: SeedLike, *labels: str | int) -> np.random.Generator:
    """Philox generator for ``seed`` (optionally split by ``labels``).

    Passing an existing generator with no labels returns it unchanged.
    """
    if isinstance(seed, np.random.Generator) and not labels:
        return seed
    return np.random.Generator(np.random.Philox(derive(seed, *labels)))


def chunk_rngs(
    rng: np.random.Generator, n_chunks: int, label: str = "chunk"
) -> list[np.random.Generator]:
    """Independent per-chunk generators derived from ``rng``'s seed sequence.

    The parent generator is not advanced; each chunk stream depends only on the
    parent seed, ``label`` and the chunk index. Callers that split the same
    parent more than once must use distinct labels.
    """
    return [make_rng(rng, label, i) for i in range(n_chunks)]
