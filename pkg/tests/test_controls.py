"""Sanity-check feature construction and their expected score bands."""

import dataclasses

import numpy as np
import pytest

from cardrank.controls import (
    ControlSpec,
    build_controls,
    default_control_specs,
    make_random_control,
    make_target_leak_control,
)
from cardrank.mi_core import NullSampler, cardmi_batch, entropy, mutual_information
from cardrank.pipeline import batches_from_columns


def one_batch(n=64, seed=0):
    rng = np.random.default_rng(seed)
    cols = {
        "f": rng.integers(0, 4, n),
        "label": rng.integers(0, 2, n),
    }
    return next(batches_from_columns(cols, "label", n))


class TestControlSpec:
    def test_constant_cardinality(self):
        with pytest.raises(ValueError):
            ControlSpec(kind="constant", name="CONTROL_c", cardinality=5)

    def test_leak_has_no_cardinality(self):
        with pytest.raises(ValueError):
            ControlSpec(kind="target_leak", name="CONTROL_leak", cardinality=2)

    def test_random_needs_cardinality(self):
        with pytest.raises(ValueError):
            ControlSpec(kind="random_uniform", name="CONTROL_u")

    def test_reserved_prefix(self):
        with pytest.raises(ValueError):
            ControlSpec(kind="constant", name="sneaky", cardinality=1)

    def test_default_set_spans_cardinalities(self):
        specs = default_control_specs(4196)
        kinds = [s.kind for s in specs]
        assert kinds.count("constant") == 1
        assert kinds.count("target_leak") == 1
        cards = sorted(s.cardinality for s in specs if s.kind == "random_uniform")
        assert cards == [2, 10, 100, 2098]


class TestMakeRandomControl:
    def test_degenerate_uniform(self):
        codes = make_random_control(1, 5, (0, 0, "CONTROL_u"))
        assert codes.tolist() == [0, 0, 0, 0, 0]

    def test_deterministic(self):
        a = make_random_control(8, 100, (3, 7, "CONTROL_u"))
        b = make_random_control(8, 100, (3, 7, "CONTROL_u"))
        assert np.array_equal(a, b)

    def test_different_batches_differ(self):
        a = make_random_control(8, 100, (3, 7, "CONTROL_u"))
        b = make_random_control(8, 100, (3, 8, "CONTROL_u"))
        assert not np.array_equal(a, b)

    def test_cardinality_bound(self):
        codes = make_random_control(1000, 100, (0, 0, "CONTROL_u"))
        assert len(np.unique(codes)) <= 100
        assert codes.max() < 1000

    def test_zero_cardinality_rejected(self):
        with pytest.raises(ValueError):
            make_random_control(0, 5, (0, 0, "CONTROL_u"))


class TestTargetLeak:
    def test_identity(self):
        target = np.array([0, 1, 0])
        assert make_target_leak_control(target).tolist() == [0, 1, 0]

    def test_is_a_copy(self):
        target = np.array([0, 1, 0])
        leak = make_target_leak_control(target)
        leak[0] = 9
        assert target[0] == 0

    def test_mi_with_target_is_target_entropy(self):
        rng = np.random.default_rng(5)
        target = rng.integers(0, 3, 200)
        leak = make_target_leak_control(target)
        assert mutual_information(leak, target) == pytest.approx(entropy(target), abs=1e-12)


class TestBuildControls:
    def test_all_specs_materialized_dense(self):
        batch = one_batch()
        specs = default_control_specs(64)
        out = build_controls(specs, batch, seed=1)
        assert set(out) == {s.name for s in specs}
        for codes, card in out.values():
            assert codes.shape == (batch.row_count,)
            assert codes.max() + 1 == card

    def test_leak_matches_target(self):
        batch = one_batch()
        specs = (ControlSpec(kind="target_leak", name="CONTROL_target_leak"),)
        codes, card = build_controls(specs, batch, seed=1)["CONTROL_target_leak"]
        assert np.array_equal(codes, batch.target_codes)
        assert card == batch.target_cardinality


class TestControlScoreBands:
    def test_uniform_controls_near_zero_over_many_batches(self):
        # the regression band: chance-corrected score of pure noise stays
        # within +/- 0.01 nats once enough batches are aggregated
        rng = np.random.default_rng(17)
        n_batches, rows = 60, 512
        specs = default_control_specs(rows)
        sums = {s.name: 0.0 for s in specs if s.kind == "random_uniform"}
        for b in range(n_batches):
            cols = {
                "f": rng.integers(0, 4, rows),
                "label": (rng.random(rows) < 0.2).astype(np.int64),
            }
            batch = next(batches_from_columns(cols, "label", rows))
            batch = dataclasses.replace(batch, batch_index=b)
            built = build_controls(specs, batch, seed=3)
            for name in sums:
                codes, _ = built[name]
                sampler = NullSampler(
                    num_samples=8, seed=3, batch_index=b, pair=("single", name)
                )
                sums[name] += cardmi_batch(batch.target_codes, codes, sampler).normalized
        for name, total in sums.items():
            assert abs(total / n_batches) <= 0.01, name

    def test_constant_control_scores_exact_zero(self):
        batch = one_batch(n=128, seed=2)
        specs = (ControlSpec(kind="constant", name="CONTROL_constant", cardinality=1),)
        codes, _ = build_controls(specs, batch, seed=0)["CONTROL_constant"]
        score = cardmi_batch(batch.target_codes, codes, NullSampler(num_samples=4))
        assert score.normalized == 0.0
