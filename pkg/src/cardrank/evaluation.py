"""Prefix-recall comparison between two rankings of the same feature set.

For each prefix length i, the score is the fraction of the reference's top-i
features recovered in the candidate's top-i.  The sum over all prefixes gives
a single scalar for comparing ranking heuristics; identical rankings score N,
and the final prefix always scores 1 because the universes must match.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["RankingFile", "recall_at", "recall_curve", "recall_sum"]


@dataclass(frozen=True)
class RankingFile:
    """An ordered feature-name list, rank 1 first."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            dupes = sorted({n for n in self.names if self.names.count(n) > 1})
            raise ValueError(f"duplicate feature names in ranking: {dupes}")
        if not self.names:
            raise ValueError("ranking must contain at least one feature")

    @classmethod
    def load(cls, path) -> "RankingFile":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(tuple(line.strip() for line in lines if line.strip()))

    def save(self, path) -> None:
        Path(path).write_text("\n".join(self.names) + "\n", encoding="utf-8")

    def __len__(self) -> int:
        return len(self.names)


def _check_universes(reference: RankingFile, candidate: RankingFile) -> None:
    ref = set(reference.names)
    cand = set(candidate.names)
    if ref != cand:
        diff = sorted(ref.symmetric_difference(cand))
        raise ValueError(f"rankings cover different feature sets; symmetric difference: {diff}")


def recall_at(reference: RankingFile, candidate: RankingFile, i: int) -> float:
    """|top-i(reference) & top-i(candidate)| / i."""
    _check_universes(reference, candidate)
    if not 1 <= i <= len(reference):
        raise ValueError(f"prefix length must be in [1, {len(reference)}], got {i}")
    ref_top = set(reference.names[:i])
    cand_top = set(candidate.names[:i])
    return len(ref_top & cand_top) / i


def recall_curve(reference: RankingFile, candidate: RankingFile) -> np.ndarray:
    """Recall at every prefix length 1..N."""
    _check_universes(reference, candidate)
    n = len(reference)
    positions = {name: i for i, name in enumerate(candidate.names)}
    ref_positions = np.array([positions[name] for name in reference.names])
    curve = np.empty(n, dtype=np.float64)
    # incremental sweep: feature r of the reference is inside the candidate
    # top-i prefix iff its candidate position is < i
    for i in range(1, n + 1):
        curve[i - 1] = np.count_nonzero(ref_positions[:i] < i) / i
    return curve


def recall_sum(reference: RankingFile, candidate: RankingFile) -> float:
    """Sum of prefix recalls; ranges from 1 (for N=1) up to N."""
    return float(recall_curve(reference, candidate).sum())
