"""Prefix-recall metric tests against hand-enumerated curves."""

import numpy as np
import pytest

from cardrank.evaluation import RankingFile, recall_at, recall_curve, recall_sum


def rf(*names):
    return RankingFile(tuple(names))


class TestRankingFile:
    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            rf("a", "b", "a")

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            RankingFile(())

    def test_load_save_round_trip(self, tmp_path):
        path = tmp_path / "rank.txt"
        rf("a", "b", "c").save(path)
        assert RankingFile.load(path).names == ("a", "b", "c")

    def test_load_skips_blank_lines(self, tmp_path):
        path = tmp_path / "rank.txt"
        path.write_text("a\n\nb\n  \nc\n")
        assert RankingFile.load(path).names == ("a", "b", "c")


class TestRecall:
    def test_identical_rankings(self):
        f = rf("a", "b", "c", "d", "e")
        for i in range(1, 6):
            assert recall_at(f, f, i) == 1.0
        assert recall_sum(f, f) == 5.0

    def test_disjoint_prefixes(self):
        f = rf("a", "b", "c", "d")
        g = rf("c", "d", "a", "b")
        assert recall_at(f, g, 1) == 0.0
        assert recall_at(f, g, 2) == 0.0

    def test_reversal_curve_hand_enumerated(self):
        # N=4 reversed: prefix intersections are {}, {}, {b,c}, {all}
        f = rf("a", "b", "c", "d")
        g = rf("d", "c", "b", "a")
        curve = recall_curve(f, g)
        assert curve.tolist() == pytest.approx([0.0, 0.0, 2 / 3, 1.0])
        assert recall_at(f, g, 3) == pytest.approx(2 / 3)
        assert recall_sum(f, g) == pytest.approx(5 / 3)

    def test_single_feature(self):
        f = rf("only")
        assert recall_sum(f, f) == 1.0

    def test_last_prefix_always_one(self):
        rng = np.random.default_rng(0)
        names = [f"f{i}" for i in range(12)]
        for _ in range(20):
            g = list(names)
            rng.shuffle(g)
            assert recall_at(rf(*names), rf(*g), 12) == 1.0

    def test_invariant_to_permutations_within_prefix(self):
        f = rf("a", "b", "c", "d", "e", "f")
        g1 = rf("c", "a", "b", "f", "d", "e")
        g2 = rf("b", "c", "a", "f", "d", "e")  # same top-3 set, shuffled
        assert recall_at(f, g1, 3) == recall_at(f, g2, 3)

    def test_symmetry_of_sum(self):
        rng = np.random.default_rng(1)
        names = [f"f{i}" for i in range(9)]
        for _ in range(20):
            g = list(names)
            h = list(names)
            rng.shuffle(g)
            rng.shuffle(h)
            assert recall_sum(rf(*g), rf(*h)) == pytest.approx(recall_sum(rf(*h), rf(*g)))

    def test_universe_mismatch_lists_difference(self):
        with pytest.raises(ValueError, match=r"\['c', 'd'\]"):
            recall_at(rf("a", "b", "c"), rf("a", "b", "d"), 2)

    def test_prefix_bounds(self):
        f = rf("a", "b")
        with pytest.raises(ValueError):
            recall_at(f, f, 0)
        with pytest.raises(ValueError):
            recall_at(f, f, 3)

    def test_curve_matches_recall_at(self):
        rng = np.random.default_rng(2)
        names = [f"f{i}" for i in range(15)]
        g = list(names)
        rng.shuffle(g)
        f_rank, g_rank = rf(*names), rf(*g)
        curve = recall_curve(f_rank, g_rank)
        for i in range(1, 16):
            assert curve[i - 1] == pytest.approx(recall_at(f_rank, g_rank, i))
