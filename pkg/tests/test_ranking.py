"""Aggregation, scaling, and greedy ordering tests."""

import math

import numpy as np
import pytest

from cardrank.ranking import (
    ScoreAccumulator,
    ThreeMRConfig,
    aggregate,
    rank_3mr,
    rank_by_score,
    scale_scores,
    statistical_function,
)


class TestAggregate:
    def test_mean(self):
        assert aggregate([0.2, 0.4], "mean") == pytest.approx(0.3)

    def test_median(self):
        assert aggregate([0.1, 0.9, 0.2], "median") == pytest.approx(0.2)

    def test_sum(self):
        assert aggregate([0.1, 0.2, 0.3], "sum") == pytest.approx(0.6)

    def test_truncate_clamps(self):
        assert aggregate([-0.2, 0.1], "mean", truncate=True) == 0.0
        assert aggregate([0.9, 1.5], "mean", truncate=True) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([], "mean")

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            aggregate([1.0], "mode")


class TestScaleScores:
    def test_basic(self):
        assert scale_scores([2, 4, 6]).tolist() == [0.0, 0.5, 1.0]

    def test_all_equal(self):
        assert scale_scores([5, 5]).tolist() == [0.0, 0.0]

    def test_identity_range(self):
        assert scale_scores([0, 1]).tolist() == [0.0, 1.0]

    def test_order_preserved(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = rng.normal(size=10)
            scaled = scale_scores(x)
            assert np.array_equal(np.argsort(scaled, kind="stable"), np.argsort(x, kind="stable"))
            assert np.argmax(scaled) == np.argmax(x)


class TestStatisticalFunction:
    def test_empty_set_is_zero(self):
        assert statistical_function([], "mean") == 0.0
        assert statistical_function([None, None], "p90") == 0.0

    def test_p90_nearest_rank(self):
        # ceil(0.9 * 10) = 9th smallest of 1..10
        assert statistical_function(list(range(1, 11)), "p90") == 9
        assert statistical_function([5.0], "p90") == 5.0
        assert statistical_function([1.0, 2.0], "p90") == 2.0

    def test_none_entries_excluded(self):
        assert statistical_function([None, 4.0, None, 2.0], "mean") == pytest.approx(3.0)


class TestScoreAccumulator:
    def test_counts_and_values(self):
        acc = ScoreAccumulator()
        acc.add("f", 0.1)
        acc.add("f", 0.3)
        assert acc.count("f") == 2
        assert acc.values("f") == [0.1, 0.3]
        assert acc.total("f") == pytest.approx(0.4)

    def test_merge(self):
        a, b = ScoreAccumulator(), ScoreAccumulator()
        a.add("f", 1.0)
        b.add("f", 2.0)
        b.add("g", 3.0)
        a.merge(b)
        assert a.values("f") == [1.0, 2.0]
        assert a.values("g") == [3.0]


class TestRankByScore:
    def test_descending(self):
        result = rank_by_score([0.1, 0.9, 0.5])
        assert result.order == (1, 2, 0)

    def test_tie_break_ascending_id(self):
        assert rank_by_score([0.5, 0.5, 0.5]).order == (0, 1, 2)

    def test_single(self):
        assert rank_by_score([3.0]).order == (0,)

    def test_scaled_in_unit_interval(self):
        result = rank_by_score([-1.0, 2.0, 0.5])
        assert min(result.scaled) == 0.0
        assert max(result.scaled) == 1.0


def brute_force_3mr(scores, r_entries, c_entries, alpha, beta, sf):
    """Literal transcription of the greedy recursion, kept deliberately naive."""

    def sf_reduce(vals):
        vals = [v for v in vals if v is not None]
        if not vals:
            return 0.0
        if sf == "mean":
            return sum(vals) / len(vals)
        if sf == "median":
            srt = sorted(vals)
            mid = len(srt) // 2
            return srt[mid] if len(srt) % 2 else (srt[mid - 1] + srt[mid]) / 2
        if sf == "sum":
            return sum(vals)
        if sf == "p90":
            srt = sorted(vals)
            k = max(1, math.ceil(0.9 * len(srt)))
            return srt[k - 1]
        raise ValueError(sf)

    def lookup(table, i, j):
        return table.get((max(i, j), min(i, j)))

    n = len(scores)
    ranked = []
    # F(0): highest score, lowest index on ties
    best = 0
    for i in range(1, n):
        if scores[i] > scores[best]:
            best = i
    ranked.append(best)
    while len(ranked) < n:
        best_j, best_val = None, None
        for j in range(n):
            if j in ranked:
                continue
            val = (
                scores[j]
                - alpha * sf_reduce([lookup(r_entries, j, k) for k in ranked])
                + beta * sf_reduce([lookup(c_entries, j, k) for k in ranked])
            )
            if best_val is None or val > best_val:
                best_j, best_val = j, val
        ranked.append(best_j)
    return tuple(ranked)


def random_instance(rng, n):
    scores = rng.random(n).tolist()
    r_entries, c_entries = {}, {}
    for i in range(n):
        for j in range(i):
            if rng.random() < 0.7:
                r_entries[(i, j)] = float(rng.random())
            if rng.random() < 0.7:
                c_entries[(i, j)] = float(rng.random())
    return scores, r_entries, c_entries


class TestRank3MR:
    def test_hand_traced_example(self):
        # step-2 scores: f2 = 0.8 - 0.5*0.6 + 0.5*0.1 = 0.55
        #                f3 = 0.7 - 0.5*0.1 + 0.5*0.4 = 0.85  -> f3 before f2
        scores = [0.9, 0.8, 0.7]
        r = {(1, 0): 0.6, (2, 0): 0.1}
        c = {(1, 0): 0.1, (2, 0): 0.4}
        cfg = ThreeMRConfig(alpha=0.5, beta=0.5, sf="mean")
        result = rank_3mr(scores, r, c, cfg)
        assert result.order == (0, 2, 1)
        assert result.margins[1] == pytest.approx(0.85)
        assert result.margins[2] == pytest.approx(0.55)

    def test_zero_weights_reduce_to_rank_by_score(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            scores, r, c = random_instance(rng, 8)
            cfg = ThreeMRConfig(alpha=0.0, beta=0.0, sf="mean")
            assert rank_3mr(scores, r, c, cfg).order == rank_by_score(scores).order

    def test_matches_brute_force(self):
        rng = np.random.default_rng(2)
        for trial in range(60):
            n = int(rng.integers(2, 12))
            scores, r, c = random_instance(rng, n)
            alpha, beta = float(rng.random()), float(rng.random())
            sf = ("mean", "median", "sum", "p90")[trial % 4]
            cfg = ThreeMRConfig(alpha=alpha, beta=beta, sf=sf)
            assert rank_3mr(scores, r, c, cfg).order == brute_force_3mr(
                scores, r, c, alpha, beta, sf
            )

    def test_first_pick_is_argmax_regardless_of_weights(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            scores, r, c = random_instance(rng, 9)
            cfg = ThreeMRConfig(alpha=float(rng.random() * 5), beta=float(rng.random() * 5))
            result = rank_3mr(scores, r, c, cfg)
            assert result.order[0] == int(np.argmax(scores))

    def test_monotone_redundancy_penalty(self):
        # raising alpha weakly lowers a candidate's step score when its
        # observed redundancy set is positive
        scores = [1.0, 0.5, 0.4]
        r = {(1, 0): 0.8, (2, 0): 0.0}
        c = {}
        lo = rank_3mr(scores, r, c, ThreeMRConfig(alpha=0.1, beta=0.0))
        hi = rank_3mr(scores, r, c, ThreeMRConfig(alpha=1.0, beta=0.0))
        # candidate 1 carries the 0.8 redundancy: with a big alpha it must fall
        assert lo.order == (0, 1, 2)
        assert hi.order == (0, 2, 1)

    def test_missing_entries_excluded(self):
        scores = [1.0, 0.2, 0.2001]
        cfg = ThreeMRConfig(alpha=10.0, beta=10.0)
        # no entries at all: pure score order, huge weights notwithstanding
        assert rank_3mr(scores, {}, {}, cfg).order == (0, 2, 1)

    def test_permutation_and_determinism(self):
        rng = np.random.default_rng(4)
        scores, r, c = random_instance(rng, 10)
        cfg = ThreeMRConfig(alpha=0.3, beta=0.7, sf="median")
        a = rank_3mr(scores, r, c, cfg)
        b = rank_3mr(scores, r, c, cfg)
        assert a.order == b.order
        assert sorted(a.order) == list(range(10))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            rank_3mr([], {}, {}, ThreeMRConfig())

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            ThreeMRConfig(alpha=-0.1)
        with pytest.raises(ValueError):
            ThreeMRConfig(sf="max")
