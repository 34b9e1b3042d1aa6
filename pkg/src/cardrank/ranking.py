"""Score aggregation, scaling, and greedy orderings.

Batch-level scores stream into per-feature accumulators, are reduced with a
chosen statistic, scaled once to [0, 1] at the end of the run, and ordered
either myopically (plain descending sort) or with the redundancy/relation
re-weighting greedy: at each step the candidate maximizing

    own score - alpha * SF(redundancies vs ranked) + beta * SF(relations vs ranked)

is appended, where SF summarizes only the entries actually observed for the
ranked prefix.  Every argmax breaks ties by ascending feature index so runs
are exactly reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RankingResult",
    "ScoreAccumulator",
    "ThreeMRConfig",
    "aggregate",
    "rank_3mr",
    "rank_by_score",
    "scale_scores",
    "statistical_function",
]

AGGREGATE_METHODS = ("mean", "median", "sum")
SF_CHOICES = ("mean", "median", "p90", "sum")


class ScoreAccumulator:
    """Per-feature stream of batch scores: running sum, count and values.

    The full value list is retained because median/percentile reductions need
    it; its size is one float per (feature, batch), not per row.
    """

    def __init__(self):
        self._values: dict[str, list[float]] = {}
        self._sums: dict[str, float] = {}

    def add(self, name: str, value: float) -> None:
        if name in self._values:
            self._values[name].append(value)
            self._sums[name] += value
        else:
            self._values[name] = [value]
            self._sums[name] = value

    def merge(self, other: "ScoreAccumulator") -> None:
        for name, vals in other._values.items():
            for v in vals:
                self.add(name, v)

    def names(self) -> list[str]:
        return list(self._values)

    def values(self, name: str) -> list[float]:
        return self._values[name]

    def count(self, name: str) -> int:
        return len(self._values[name])

    def total(self, name: str) -> float:
        return self._sums[name]


def aggregate(scores, method: str = "mean", truncate: bool = False) -> float:
    """Reduce a batch-score sequence to one number, optionally clamped to [0, 1]."""
    values = np.asarray(scores, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot aggregate an empty score sequence")
    if method == "mean":
        out = float(values.mean())
    elif method == "median":
        out = float(np.median(values))
    elif method == "sum":
        out = float(values.sum())
    else:
        raise ValueError(f"unknown aggregate method {method!r}, expected {AGGREGATE_METHODS}")
    if truncate:
        out = min(1.0, max(0.0, out))
    return out


def scale_scores(x) -> np.ndarray:
    """Min-max scale to [0, 1]; an all-equal vector maps to all zeros."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot scale an empty score vector")
    lo = arr.min()
    hi = arr.max()
    if hi == lo:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def statistical_function(values, kind: str) -> float:
    """SF reduction over a candidate's observed entries; empty set gives 0."""
    vals = [v for v in values if v is not None]
    if not vals:
        return 0.0
    if kind == "mean":
        return sum(vals) / len(vals)
    if kind == "median":
        return float(np.median(vals))
    if kind == "sum":
        return float(sum(vals))
    if kind == "p90":
        # nearest-rank percentile: the ceil(0.9 n)-th smallest value
        ordered = sorted(vals)
        k = max(1, math.ceil(0.9 * len(ordered)))
        return ordered[k - 1]
    raise ValueError(f"unknown SF {kind!r}, expected {SF_CHOICES}")


@dataclass(frozen=True)
class ThreeMRConfig:
    """Weights and statistic for the redundancy/relation re-weighting."""

    alpha: float = 0.1
    beta: float = 0.2
    sf: str = "mean"

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if self.sf not in SF_CHOICES:
            raise ValueError(f"sf must be one of {SF_CHOICES}, got {self.sf!r}")


@dataclass(frozen=True)
class RankingResult:
    """An ordering of feature indices with scores and provenance."""

    order: tuple[int, ...]
    scores: tuple[float, ...]
    scaled: tuple[float, ...]
    margins: tuple[float, ...]
    heuristic: str
    config: dict = field(default_factory=dict)


def _pair_value(matrix, i: int, j: int):
    if matrix is None:
        return None
    if hasattr(matrix, "get") and not isinstance(matrix, dict):
        return matrix.get(i, j)
    key = (i, j) if i > j else (j, i)
    return matrix.get(key)


def rank_by_score(scores, heuristic: str = "score", config: dict | None = None) -> RankingResult:
    """Descending score order, ties broken by ascending feature index."""
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise ValueError("cannot rank an empty score vector")
    order = sorted(range(s.size), key=lambda i: (-s[i], i))
    scaled = scale_scores(s)
    return RankingResult(
        order=tuple(order),
        scores=tuple(float(v) for v in s),
        scaled=tuple(float(v) for v in scaled),
        margins=tuple(float(s[i]) for i in order),
        heuristic=heuristic,
        config=dict(config or {}),
    )


def rank_3mr(
    scores,
    redundancy,
    relation,
    cfg: ThreeMRConfig,
    heuristic: str = "3mr",
    config: dict | None = None,
) -> RankingResult:
    """Greedy ordering under the redundancy/relation re-weighted objective.

    `redundancy` and `relation` hold pairwise entries (PairAccumulator or a
    dict keyed by (i, j) with i > j); entries absent for a candidate/prefix
    pair are simply left out of the SF set.  With beta=0 this is the classic
    relevance-minus-redundancy greedy; with alpha=beta=0 it degenerates to
    rank_by_score.
    """
    s = np.asarray(scores, dtype=np.float64)
    n = s.size
    if n == 0:
        raise ValueError("cannot rank an empty score vector")
    order: list[int] = []
    margins: list[float] = []
    remaining = list(range(n))

    first = max(remaining, key=lambda i: (s[i], -i))
    order.append(first)
    margins.append(float(s[first]))
    remaining.remove(first)

    while remaining:
        best = None
        best_score = -math.inf
        for j in remaining:
            r_set = [_pair_value(redundancy, j, k) for k in order]
            c_set = [_pair_value(relation, j, k) for k in order]
            score_j = (
                float(s[j])
                - cfg.alpha * statistical_function(r_set, cfg.sf)
                + cfg.beta * statistical_function(c_set, cfg.sf)
            )
            if score_j > best_score:
                best = j
                best_score = score_j
        order.append(best)
        margins.append(best_score)
        remaining.remove(best)

    scaled = scale_scores(s)
    return RankingResult(
        order=tuple(order),
        scores=tuple(float(v) for v in s),
        scaled=tuple(float(v) for v in scaled),
        margins=tuple(margins),
        heuristic=heuristic,
        config=dict(config or {}),
    )
