"""Named deterministic random streams.

Every random draw in the engine flows from one global seed through a named
stream key such as (seed, "control", batch_index, name) or
(seed, "null", batch_index, pair, sample_index).  Streams derived from equal
keys are bit-identical across runs, platforms and thread schedules, which is
what makes per-batch scoring reproducible regardless of execution order.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_rng"]


def _key_words(part) -> list[int]:
    """Encode one key part as uint32 words for SeedSequence entropy."""
    if isinstance(part, (int, np.integer)):
        value = int(part)
        if value < 0:
            raise ValueError(f"stream key parts must be non-negative, got {value}")
        words = [value & 0xFFFFFFFF]
        value >>= 32
        while value:
            words.append(value & 0xFFFFFFFF)
            value >>= 32
        return words
    if isinstance(part, str):
        digest = hashlib.blake2b(part.encode("utf-8"), digest_size=8).digest()
        return [
            int.from_bytes(digest[:4], "little"),
            int.from_bytes(digest[4:], "little"),
        ]
    if isinstance(part, (tuple, list)):
        words: list[int] = []
        for sub in part:
            words.extend(_key_words(sub))
        return words
    raise TypeError(f"unsupported stream key part: {part!r}")


def derive_rng(seed: int, *key: object) -> np.random.Generator:
    """Return a Generator for the stream named by (seed, *key)."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for part in key:
        entropy.extend(_key_words(part))
    return np.random.default_rng(np.random.SeedSequence(entropy))
