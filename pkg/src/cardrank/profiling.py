"""Streaming per-feature data-quality profiling.

Distinct counts use a hybrid sketch: an exact hash set up to a small
threshold, promoted to HyperLogLog registers beyond it, so low-cardinality
features (the common case) report exact numbers while high-cardinality ones
stay within a fixed memory budget.  Coverage and top values accumulate
exactly within a batch and by bounded count aggregation across batches.
Both structures merge associatively, so per-worker partials fold into the
same result regardless of schedule.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter

import numpy as np

from .schema_ingest import EncodedBatch

__all__ = [
    "CardinalitySketch",
    "CoverageStats",
    "FeatureProfiler",
    "coverage_update",
    "sketch_estimate",
    "sketch_insert",
]

_DEFAULT_PRECISION = 14
_DEFAULT_EXACT_LIMIT = 1024


def _hash64(token) -> int:
    data = token if isinstance(token, bytes) else str(token).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "big")


def _alpha(m: int) -> float:
    if m == 16:
        return 0.673
    if m == 32:
        return 0.697
    if m == 64:
        return 0.709
    return 0.7213 / (1.0 + 1.079 / m)


class CardinalitySketch:
    """Mergeable distinct-count sketch: exact small-set mode, then HLL registers."""

    def __init__(self, precision: int = _DEFAULT_PRECISION, exact_limit: int = _DEFAULT_EXACT_LIMIT):
        if not 4 <= precision <= 18:
            raise ValueError(f"precision must be in [4, 18], got {precision}")
        self.precision = precision
        self.exact_limit = exact_limit
        self._exact: set[int] | None = set()
        self._registers: np.ndarray | None = None

    @property
    def promoted(self) -> bool:
        return self._registers is not None

    def _promote(self) -> None:
        m = 1 << self.precision
        regs = np.zeros(m, dtype=np.uint8)
        self._registers = regs
        for h in self._exact:
            self._add_hash(h)
        self._exact = None

    def _add_hash(self, h: int) -> None:
        shift = 64 - self.precision
        idx = h >> shift
        rem = h & ((1 << shift) - 1)
        rho = shift - rem.bit_length() + 1
        if rho > self._registers[idx]:
            self._registers[idx] = rho

    def insert(self, token) -> "CardinalitySketch":
        h = _hash64(token)
        if self._registers is not None:
            self._add_hash(h)
            return self
        self._exact.add(h)
        if len(self._exact) > self.exact_limit:
            self._promote()
        return self

    def insert_tokens(self, tokens) -> "CardinalitySketch":
        for t in tokens:
            self.insert(t)
        return self

    def estimate(self) -> float:
        if self._registers is None:
            return float(len(self._exact))
        regs = self._registers
        m = regs.size
        raw = _alpha(m) * m * m / float(np.sum(np.exp2(-regs.astype(np.float64))))
        if raw <= 2.5 * m:
            zeros = int(np.count_nonzero(regs == 0))
            if zeros > 0:
                return m * math.log(m / zeros)
        return raw

    def merge(self, other: "CardinalitySketch") -> "CardinalitySketch":
        if self.precision != other.precision:
            raise ValueError("cannot merge sketches of different precision")
        if self._registers is None and other._registers is None:
            self._exact |= other._exact
            if len(self._exact) > self.exact_limit:
                self._promote()
            return self
        if self._registers is None:
            self._promote()
        if other._registers is None:
            for h in other._exact:
                self._add_hash(h)
        else:
            np.maximum(self._registers, other._registers, out=self._registers)
        return self

    def copy(self) -> "CardinalitySketch":
        clone = CardinalitySketch(self.precision, self.exact_limit)
        clone._exact = None if self._exact is None else set(self._exact)
        clone._registers = None if self._registers is None else self._registers.copy()
        return clone


def sketch_insert(sketch: CardinalitySketch, token) -> CardinalitySketch:
    return sketch.insert(token)


def sketch_estimate(sketch: CardinalitySketch) -> float:
    return sketch.estimate()


class CoverageStats:
    """Row/missing totals and approximate top values for one feature."""

    def __init__(self, name: str, top_k: int = 10, retain: int = 128):
        self.name = name
        self.top_k = top_k
        self.retain = max(retain, top_k)
        self.total = 0
        self.missing = 0
        self._counter: Counter = Counter()

    @property
    def coverage(self) -> float:
        return 1.0 if self.total == 0 else 1.0 - self.missing / self.total

    def update_from_batch(self, batch: EncodedBatch) -> "CoverageStats":
        self.total += batch.row_count
        self.missing += batch.missing_counts[self.name]
        counts = batch.counts[self.name]
        uniq = batch.uniques[self.name]
        k = min(self.top_k, counts.size)
        top = np.argpartition(counts, -k)[-k:]
        for idx in top:
            self._counter[str(uniq[idx])] += int(counts[idx])
        self._prune()
        return self

    def merge(self, other: "CoverageStats") -> "CoverageStats":
        self.total += other.total
        self.missing += other.missing
        self._counter.update(other._counter)
        self._prune()
        return self

    def _prune(self) -> None:
        if len(self._counter) > self.retain:
            kept = sorted(self._counter.items(), key=lambda kv: (-kv[1], kv[0]))[: self.retain]
            self._counter = Counter(dict(kept))

    def top_values(self) -> list[tuple[str, int]]:
        ordered = sorted(self._counter.items(), key=lambda kv: (-kv[1], kv[0]))
        return ordered[: self.top_k]


def coverage_update(stats: CoverageStats, batch: EncodedBatch) -> CoverageStats:
    return stats.update_from_batch(batch)


class FeatureProfiler:
    """Profile container for every retained column of a stream."""

    def __init__(self, names, precision: int = _DEFAULT_PRECISION, top_k: int = 10):
        self.names = tuple(names)
        self.sketches = {n: CardinalitySketch(precision) for n in self.names}
        self.coverage = {n: CoverageStats(n, top_k=top_k) for n in self.names}

    def update(self, batch: EncodedBatch) -> "FeatureProfiler":
        for name in self.names:
            self.sketches[name].insert_tokens(batch.uniques[name])
            self.coverage[name].update_from_batch(batch)
        return self

    def merge(self, other: "FeatureProfiler") -> "FeatureProfiler":
        for name in self.names:
            self.sketches[name].merge(other.sketches[name])
            self.coverage[name].merge(other.coverage[name])
        return self

    def report(self) -> dict:
        out = {}
        for name in self.names:
            cov = self.coverage[name]
            out[name] = {
                "estimated_cardinality": self.sketches[name].estimate(),
                "rows": cov.total,
                "missing": cov.missing,
                "coverage": cov.coverage,
                "top_values": [{"value": v, "count": c} for v, c in cov.top_values()],
            }
        return out
