"""Synthetic dataset generator tests."""

import json

import numpy as np
import pytest

from cardrank.mi_core import NullSampler, cardmi_batch, entropy, mutual_information
from cardrank.pipeline import batches_from_columns
from cardrank.synthgen import InformativeSpec, SynthSpec, generate, generate_columns


def spec_of(**kw):
    defaults = dict(
        n_rows=2000,
        informative=(InformativeSpec(4, 0.2),),
        noise_cardinalities=(8,),
        positive_rate=0.3,
        seed=5,
    )
    defaults.update(kw)
    return SynthSpec(**defaults)


class TestSpecValidation:
    def test_flip_probability_bounds(self):
        with pytest.raises(ValueError):
            InformativeSpec(4, 1.5)

    def test_informative_cardinality(self):
        with pytest.raises(ValueError):
            InformativeSpec(1, 0.1)

    def test_positive_rate(self):
        with pytest.raises(ValueError):
            spec_of(positive_rate=0.0)

    def test_rows(self):
        with pytest.raises(ValueError):
            spec_of(n_rows=0)

    def test_from_json(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({
            "n_rows": 100,
            "informative": [{"cardinality": 4, "flip_probability": 0.2}],
            "noise_cardinalities": [8, 16],
            "xor_pair": True,
            "seed": 3,
        }))
        spec = SynthSpec.from_json(path)
        assert spec.n_rows == 100
        assert spec.xor_pair
        assert spec.column_names == ("info_00", "noise_00", "noise_01", "xor_a", "xor_b", "label")


class TestGeneration:
    def test_byte_identical_per_seed(self, tmp_path):
        spec = spec_of(n_rows=70000)  # crosses the block boundary
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        generate(spec, p1)
        generate(spec, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_different_seed_differs(self, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        generate(spec_of(seed=1), p1)
        generate(spec_of(seed=2), p2)
        assert p1.read_bytes() != p2.read_bytes()

    def test_file_matches_in_memory_columns(self, tmp_path):
        import pandas as pd

        spec = spec_of(n_rows=1000, xor_pair=True)
        path = tmp_path / "d.csv"
        generate(spec, path)
        frame = pd.read_csv(path, dtype=np.int64)
        cols, _ = generate_columns(spec)
        for name in spec.column_names:
            assert np.array_equal(frame[name].to_numpy(), cols[name]), name

    def test_manifest_relevance_order(self, tmp_path):
        spec = SynthSpec(
            n_rows=100,
            informative=(
                InformativeSpec(4, 0.5),
                InformativeSpec(4, 0.1),
                InformativeSpec(4, 0.3),
            ),
            seed=1,
        )
        manifest = generate(spec, tmp_path / "d.csv", tmp_path / "truth.json")
        assert manifest["relevant"] == ["info_01", "info_02", "info_00"]
        loaded = json.loads((tmp_path / "truth.json").read_text())
        assert loaded["relevant"] == manifest["relevant"]

    def test_positive_rate_respected(self):
        cols, _ = generate_columns(spec_of(n_rows=50000, positive_rate=0.1))
        assert cols["label"].mean() == pytest.approx(0.1, abs=0.01)

    def test_xor_identity(self):
        cols, _ = generate_columns(spec_of(xor_pair=True))
        assert np.array_equal(cols["xor_a"] ^ cols["xor_b"], cols["label"])


class TestPlantedSignal:
    def test_p_zero_mi_equals_target_entropy(self):
        # a never-corrupted column determines the target exactly
        spec = spec_of(n_rows=4096, informative=(InformativeSpec(6, 0.0),))
        cols, _ = generate_columns(spec)
        mi = mutual_information(cols["label"], cols["info_00"])
        assert mi == pytest.approx(entropy(cols["label"]), abs=1e-12)

    def test_p_one_indistinguishable_from_noise(self):
        # fully corrupted column: chance-corrected score within the control band
        spec = spec_of(n_rows=512 * 55, informative=(InformativeSpec(8, 1.0),), seed=9)
        cols, _ = generate_columns(spec)
        total = 0.0
        count = 0
        for batch in batches_from_columns(cols, "label", 512):
            sampler = NullSampler(
                num_samples=8, seed=1, batch_index=batch.batch_index, pair=("s", "info_00")
            )
            total += cardmi_batch(batch.target_codes, batch.codes["info_00"], sampler).normalized
            count += 1
        assert count >= 50
        assert abs(total / count) <= 0.01

    def test_lower_flip_probability_scores_higher(self):
        # monotone signal recovery for p1 < p2 at matched cardinality
        wins = 0
        seeds = range(6)
        for seed in seeds:
            spec = SynthSpec(
                n_rows=100_000,
                informative=(InformativeSpec(8, 0.3), InformativeSpec(8, 0.5)),
                positive_rate=0.2,
                seed=100 + seed,
            )
            cols, _ = generate_columns(spec)
            scores = {"info_00": 0.0, "info_01": 0.0}
            for batch in batches_from_columns(cols, "label", 4196):
                for name in scores:
                    sampler = NullSampler(
                        num_samples=4, seed=seed, batch_index=batch.batch_index,
                        pair=("s", name),
                    )
                    scores[name] += cardmi_batch(
                        batch.target_codes, batch.codes[name], sampler
                    ).normalized
            wins += scores["info_00"] > scores["info_01"]
        assert wins >= len(seeds) - 1
