"""Counting-based entropy and mutual information on dense code arrays.

All estimates are plug-in (empirical) estimates in nats.  The joint table is
never materialized as a dense cardinality-by-cardinality grid: co-occurring
code pairs are fused into single integers and counted sparsely, so cost is
bounded by the number of rows regardless of how many distinct values the
inputs take.  The chance-level baseline for a pair is measured by scoring
against null samples of the same cardinality (permutations of the observed
codes, or fresh uniform draws), and the batch score is the raw MI minus that
baseline.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ._streams import derive_rng

__all__ = [
    "BatchScore",
    "NullSampler",
    "cardmi_batch",
    "entropy",
    "mutual_information",
    "null_expectation",
]

# Max rows for exhaustive permutation enumeration; n! grows too fast beyond this.
_EXHAUSTIVE_LIMIT = 10


def _as_codes(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"code array must be 1-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("code array must be non-empty")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError(f"code array must be integer, got dtype {arr.dtype}")
    return np.ascontiguousarray(arr, dtype=np.int64)


def _counts(codes: np.ndarray, upper: int) -> np.ndarray:
    """Nonzero value counts; bincount when the range is small, sort otherwise."""
    if upper <= max(4 * codes.size, 4096):
        cnt = np.bincount(codes, minlength=0)
        return cnt[cnt > 0]
    _, cnt = np.unique(codes, return_counts=True)
    return cnt


def entropy(codes) -> float:
    """Empirical entropy in nats: H = -sum_k (n_k/n) ln(n_k/n)."""
    arr = _as_codes(codes)
    if arr.min() < 0:
        raise ValueError("codes must be non-negative")
    n = arr.size
    cnt = _counts(arr, int(arr.max()) + 1)
    # H = ln n - (sum c ln c) / n  avoids forming probabilities per cell
    return float(np.log(n) - np.dot(cnt, np.log(cnt)) / n)


def mutual_information(u, v) -> float:
    """Plug-in MI in nats from the sparse joint contingency table.

    Symmetric in its arguments bit-for-bit: inputs are put in a canonical
    order before counting so the floating-point summation order is identical
    either way.
    """
    a = _as_codes(u)
    b = _as_codes(v)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.min() < 0 or b.min() < 0:
        raise ValueError("codes must be non-negative")
    ca = int(a.max()) + 1
    cb = int(b.max()) + 1
    if ca > cb or (ca == cb and a.tobytes() > b.tobytes()):
        a, b, ca, cb = b, a, cb, ca
    return _mi_counted(a, b, ca, cb)


def _mi_counted(a: np.ndarray, b: np.ndarray, ca: int, cb: int) -> float:
    if ca == 1 or cb == 1:
        return 0.0
    n = a.size
    fused = a * cb + b
    if ca * cb <= max(4 * n, 4096):
        joint = np.bincount(fused, minlength=ca * cb)
        cells = np.flatnonzero(joint)
        cnt = joint[cells]
    else:
        cells, cnt = np.unique(fused, return_counts=True)
    a_counts = np.bincount(a, minlength=ca)
    b_counts = np.bincount(b, minlength=cb)
    ia, ib = np.divmod(cells, cb)
    terms = cnt * (np.log(cnt * float(n)) - np.log(a_counts[ia]) - np.log(b_counts[ib]))
    mi = float(terms.sum()) / n
    # guard against -1e-17 style rounding on independent tables
    return mi if mi > 0.0 else 0.0


@dataclass(frozen=True)
class NullSampler:
    """Generator of same-cardinality null features for one (batch, pair).

    mode "permutation" shuffles the observed codes, preserving the realized
    marginal counts exactly; mode "uniform_cardinality" draws i.i.d. uniform
    codes over the observed cardinality.  Draws are keyed by
    (seed, batch_index, pair, sample_index) so they are reproducible and
    independent of scheduling.  With exhaustive=True (permutation mode only,
    small arrays) every distinct arrangement is enumerated instead of sampled.
    """

    mode: str = "permutation"
    num_samples: int = 8
    seed: int = 0
    batch_index: int = 0
    pair: tuple = field(default=())
    exhaustive: bool = False

    def __post_init__(self):
        if self.mode not in ("permutation", "uniform_cardinality"):
            raise ValueError(f"unknown null mode: {self.mode!r}")
        if not self.exhaustive and self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")

    def samples(self, v: np.ndarray):
        """Yield null code arrays for the observed feature codes v."""
        v = _as_codes(v)
        if self.exhaustive:
            if self.mode != "permutation":
                raise ValueError("exhaustive enumeration requires permutation mode")
            if v.size > _EXHAUSTIVE_LIMIT:
                raise ValueError(
                    f"exhaustive enumeration limited to {_EXHAUSTIVE_LIMIT} rows, got {v.size}"
                )
            for arrangement in sorted(set(itertools.permutations(v.tolist()))):
                yield np.asarray(arrangement, dtype=np.int64)
            return
        cardinality = int(v.max()) + 1
        for k in range(self.num_samples):
            rng = derive_rng(self.seed, "null", self.batch_index, self.pair, k)
            if self.mode == "permutation":
                yield rng.permutation(v)
            else:
                yield rng.integers(0, cardinality, size=v.size, dtype=np.int64)


def null_expectation(u, v, sampler: NullSampler) -> float:
    """Mean MI(u, S) over the sampler's null features S for v."""
    u = _as_codes(u)
    v = _as_codes(v)
    if u.size != v.size:
        raise ValueError(f"length mismatch: {u.size} vs {v.size}")
    total = 0.0
    count = 0
    for s in sampler.samples(v):
        total += mutual_information(u, s)
        count += 1
    return total / count


@dataclass(frozen=True)
class BatchScore:
    """One batch-level score: raw MI and its chance-corrected value."""

    batch_index: int
    raw_mi: float
    null_mean: float
    normalized: float


def cardmi_batch(u, v, sampler: NullSampler) -> BatchScore:
    """Score v against u on one batch: raw MI minus the null expectation.

    The null model randomizes v (the feature under evaluation), so v's
    cardinality is what sets the chance level being subtracted.  The result
    may be negative.
    """
    raw = mutual_information(u, v)
    null = null_expectation(u, v, sampler)
    return BatchScore(
        batch_index=sampler.batch_index,
        raw_mi=raw,
        null_mean=null,
        normalized=raw - null,
    )
