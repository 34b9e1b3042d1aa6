"""Hash-combined interaction features and their score accumulators.

Interaction candidates are pairs (optionally triples) of feature indices.
Per batch, a fixed-size buffer of candidates is drawn deterministically from
the combination universe, each selected tuple is collapsed row-wise into a
single 64-bit hash and re-encoded to dense batch-local codes, and its score
contributes to a sparse running (sum, count) cell.  Work per batch is bounded
by the buffer size no matter how many features exist; with enough batches
every candidate is sampled often enough for a stable mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._streams import derive_rng
from .mi_core import NullSampler, cardmi_batch
from .schema_ingest import EncodedBatch

__all__ = [
    "CombinedFeature",
    "FeatureBuffer",
    "FeatureUniverse",
    "PairAccumulator",
    "PairEntry",
    "accumulate_redundancy",
    "accumulate_relation",
    "combine",
    "combine_detailed",
    "sample_buffer",
]

_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_PRIME = np.uint64(0xFF51AFD7ED558CCD)


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer: full-avalanche 64-bit mix."""
    x = x ^ (x >> np.uint64(30))
    x = x * _MIX1
    x = x ^ (x >> np.uint64(27))
    x = x * _MIX2
    return x ^ (x >> np.uint64(31))


@dataclass(frozen=True)
class CombinedFeature:
    """An interaction candidate: a sorted tuple of feature indices."""

    members: tuple[int, ...]

    def __post_init__(self):
        if len(self.members) not in (2, 3):
            raise ValueError(f"interactions are order 2 or 3, got {len(self.members)}")
        if any(b <= a for a, b in zip(self.members, self.members[1:])):
            raise ValueError(f"members must be strictly increasing, got {self.members}")

    def display_name(self, feature_names) -> str:
        return "AND".join(feature_names[i] for i in self.members)


class FeatureUniverse:
    """All size-k index tuples over n features, addressable by rank."""

    def __init__(self, n_features: int, order: int = 2):
        if order not in (2, 3):
            raise ValueError(f"order must be 2 or 3, got {order}")
        self.n = n_features
        self.order = order
        if order == 2:
            self.size = n_features * (n_features - 1) // 2
        else:
            self.size = n_features * (n_features - 1) * (n_features - 2) // 6
        # cumulative pair counts by first index, for unranking
        firsts = np.arange(n_features, dtype=np.int64)
        self._pair_cum = np.cumsum(n_features - 1 - firsts)
        if order == 3:
            remaining = n_features - 1 - firsts
            triple_counts = remaining * (remaining - 1) // 2
            self._triple_cum = np.cumsum(triple_counts)

    def _unrank_pair(self, r: int) -> tuple[int, int]:
        cum = self._pair_cum
        i = int(np.searchsorted(cum, r, side="right"))
        before = int(cum[i - 1]) if i > 0 else 0
        j = r - before + i + 1
        return i, int(j)

    def unrank(self, r: int) -> tuple[int, ...]:
        if not 0 <= r < self.size:
            raise IndexError(f"rank {r} out of range for universe of {self.size}")
        if self.order == 2:
            return self._unrank_pair(r)
        cum = self._triple_cum
        i = int(np.searchsorted(cum, r, side="right"))
        before = int(cum[i - 1]) if i > 0 else 0
        sub = FeatureUniverse(self.n - i - 1, 2)
        j, k = sub.unrank(r - before)
        return (i, j + i + 1, k + i + 1)


@dataclass(frozen=True)
class FeatureBuffer:
    """The interaction candidates selected for one batch."""

    buffer_size: int
    batch_index: int
    selected: tuple[CombinedFeature, ...]


def sample_buffer(
    universe: FeatureUniverse,
    buffer_size: int,
    batch_index: int,
    seed: int,
) -> FeatureBuffer:
    """Uniform sample without replacement, a pure function of (seed, batch)."""
    if buffer_size < 1:
        raise ValueError(f"buffer_size must be >= 1, got {buffer_size}")
    m = min(buffer_size, universe.size)
    if m == 0:
        return FeatureBuffer(buffer_size=buffer_size, batch_index=batch_index, selected=())
    rng = derive_rng(seed, "buffer", batch_index)
    if m == universe.size:
        ranks = np.arange(universe.size, dtype=np.int64)
    elif 4 * m >= universe.size:
        ranks = np.sort(rng.permutation(universe.size)[:m])
    else:
        # keep the first m distinct draws; unbiased and cheap while m << size
        seen: set[int] = set()
        while len(seen) < m:
            for x in rng.integers(0, universe.size, size=2 * (m - len(seen))).tolist():
                if x not in seen:
                    seen.add(x)
                    if len(seen) == m:
                        break
        ranks = np.sort(np.fromiter(seen, dtype=np.int64))
    selected = tuple(CombinedFeature(universe.unrank(int(r))) for r in ranks)
    return FeatureBuffer(buffer_size=buffer_size, batch_index=batch_index, selected=selected)


def _member_codes(batch: EncodedBatch, members: tuple[int, ...]):
    names = batch.feature_names
    for i in members:
        if not 0 <= i < len(names):
            raise KeyError(f"unknown feature index {i}")
    return [batch.codes[names[i]] for i in members], [
        batch.cardinalities[names[i]] for i in members
    ]


def combine_detailed(
    batch: EncodedBatch,
    members: tuple[int, ...],
    hash_seed: int,
) -> tuple[np.ndarray, int, int]:
    """Hash member code tuples row-wise; return (codes, cardinality, collisions).

    Collisions counts distinct exact tuples that were merged by the 64-bit
    hash; at desk scale it should be zero.
    """
    members = tuple(sorted(members))
    code_arrays, cards = _member_codes(batch, members)
    h = _mix64(np.full(batch.row_count, np.uint64(hash_seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN))
    for c in code_arrays:
        h = _mix64(h ^ (c.astype(np.uint64) * _PRIME + _GOLDEN))
    uniq, codes = np.unique(h, return_inverse=True)

    # exact tuple count via mixed-radix fusion (falls back to row-wise unique
    # if the radix product would overflow int64)
    radix_product = 1
    for c in cards:
        radix_product *= c
    if radix_product < 2**62:
        fused = code_arrays[0].astype(np.int64)
        for c_arr, card in zip(code_arrays[1:], cards[1:]):
            fused = fused * card + c_arr
        exact = len(np.unique(fused))
    else:
        exact = len(np.unique(np.stack(code_arrays, axis=1), axis=0))
    return codes.astype(np.int64), len(uniq), exact - len(uniq)


def combine(batch: EncodedBatch, members: tuple[int, ...], hash_seed: int) -> np.ndarray:
    """Dense batch-local codes of the hashed member tuple."""
    codes, _, _ = combine_detailed(batch, members, hash_seed)
    return codes


@dataclass(frozen=True)
class PairEntry:
    """Finalized accumulator cell."""

    score: float
    count: int
    low_confidence: bool


class PairAccumulator:
    """Sparse lower-triangular (sum, count) accumulator keyed (i, j), i > j.

    Used for both the redundancy matrix (feature vs feature) and the relation
    matrix (combined pair vs target).  Cells exist only for observed pairs;
    a pair never sampled stays absent rather than zero.
    """

    def __init__(self):
        self._cells: dict[tuple[int, int], list] = {}

    def add(self, i: int, j: int, score: float) -> None:
        if i == j:
            raise ValueError("diagonal cells are not tracked")
        key = (i, j) if i > j else (j, i)
        cell = self._cells.get(key)
        if cell is None:
            self._cells[key] = [score, 1]
        else:
            cell[0] += score
            cell[1] += 1

    def merge(self, other: "PairAccumulator") -> None:
        for key, (s, c) in other._cells.items():
            cell = self._cells.get(key)
            if cell is None:
                self._cells[key] = [s, c]
            else:
                cell[0] += s
                cell[1] += c

    def get(self, i: int, j: int) -> float | None:
        key = (i, j) if i > j else (j, i)
        cell = self._cells.get(key)
        return None if cell is None else cell[0] / cell[1]

    def __len__(self) -> int:
        return len(self._cells)

    def finalize(self, min_count: int = 3) -> dict[tuple[int, int], PairEntry]:
        return {
            key: PairEntry(score=s / c, count=c, low_confidence=c < min_count)
            for key, (s, c) in sorted(self._cells.items())
        }


def accumulate_redundancy(
    batch: EncodedBatch,
    buffer: FeatureBuffer,
    matrix: PairAccumulator,
    *,
    seed: int,
    null_mode: str = "permutation",
    num_samples: int = 8,
    measure: str = "cardmi",
) -> PairAccumulator:
    """Score each buffered pair feature-vs-feature and fold into the matrix."""
    names = batch.feature_names
    for cand in buffer.selected:
        if len(cand.members) != 2:
            continue
        lo, hi = cand.members
        sampler = NullSampler(
            mode=null_mode,
            num_samples=num_samples,
            seed=seed,
            batch_index=batch.batch_index,
            pair=("redundancy", hi, lo),
        )
        score = cardmi_batch(batch.codes[names[hi]], batch.codes[names[lo]], sampler)
        matrix.add(hi, lo, score.raw_mi if measure == "mi_raw" else score.normalized)
    return matrix


def accumulate_relation(
    batch: EncodedBatch,
    buffer: FeatureBuffer,
    matrix: PairAccumulator,
    *,
    hash_seed: int,
    seed: int,
    null_mode: str = "permutation",
    num_samples: int = 8,
    measure: str = "cardmi",
    collision_counter: list | None = None,
) -> PairAccumulator:
    """Score each buffered pair's hashed combination against the target."""
    target = batch.target_codes
    for cand in buffer.selected:
        if len(cand.members) != 2:
            continue
        lo, hi = cand.members
        combined, _, collisions = combine_detailed(batch, cand.members, hash_seed)
        if collision_counter is not None:
            collision_counter[0] += collisions
        sampler = NullSampler(
            mode=null_mode,
            num_samples=num_samples,
            seed=seed,
            batch_index=batch.batch_index,
            pair=("relation", hi, lo),
        )
        score = cardmi_batch(target, combined, sampler)
        matrix.add(hi, lo, score.raw_mi if measure == "mi_raw" else score.normalized)
    return matrix
