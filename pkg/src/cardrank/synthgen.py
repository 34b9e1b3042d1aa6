"""Planted-signal synthetic datasets with a known relevance ordering.

Informative columns encode a binary target through a fixed random two-class
split of their value set: each row draws uniformly among the values assigned
to its target class, except with the column's flip probability the draw is
uniform over all values.  Flip probability 0 makes the column a deterministic
witness of the target at any cardinality; probability 1 makes it pure noise.
An optional pair of binary columns carries the target only jointly: one is a
fair coin and the other is its XOR with the target, so each alone is
independent of the label.

Generation is blocked with per-(column, block) random streams, so output is
byte-identical for a seed regardless of how many rows are materialized at
once, and memory stays bounded for arbitrarily long files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from ._streams import derive_rng

__all__ = ["InformativeSpec", "SynthSpec", "generate", "generate_columns"]

_BLOCK_ROWS = 65536

TARGET_NAME = "label"
XOR_NAMES = ("xor_a", "xor_b")


@dataclass(frozen=True)
class InformativeSpec:
    """One planted column: value-set size and per-row corruption chance."""

    cardinality: int
    flip_probability: float

    def __post_init__(self):
        if self.cardinality < 2:
            raise ValueError("informative columns need cardinality >= 2")
        if not 0.0 <= self.flip_probability <= 1.0:
            raise ValueError(f"flip_probability must be in [0, 1], got {self.flip_probability}")


@dataclass(frozen=True)
class SynthSpec:
    """Full dataset recipe; deterministic given the seed."""

    n_rows: int
    informative: tuple[InformativeSpec, ...] = ()
    noise_cardinalities: tuple[int, ...] = ()
    positive_rate: float = 0.1
    xor_pair: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n_rows < 1:
            raise ValueError("n_rows must be >= 1")
        if not 0.0 < self.positive_rate < 1.0:
            raise ValueError("positive_rate must be in (0, 1)")
        for c in self.noise_cardinalities:
            if c < 1:
                raise ValueError(f"noise cardinality must be >= 1, got {c}")

    @property
    def informative_names(self) -> tuple[str, ...]:
        return tuple(f"info_{i:02d}" for i in range(len(self.informative)))

    @property
    def noise_names(self) -> tuple[str, ...]:
        return tuple(f"noise_{i:02d}" for i in range(len(self.noise_cardinalities)))

    @property
    def column_names(self) -> tuple[str, ...]:
        names = list(self.informative_names) + list(self.noise_names)
        if self.xor_pair:
            names.extend(XOR_NAMES)
        names.append(TARGET_NAME)
        return tuple(names)

    @classmethod
    def from_json(cls, path) -> "SynthSpec":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            n_rows=raw["n_rows"],
            informative=tuple(
                InformativeSpec(entry["cardinality"], entry["flip_probability"])
                for entry in raw.get("informative", [])
            ),
            noise_cardinalities=tuple(raw.get("noise_cardinalities", [])),
            positive_rate=raw.get("positive_rate", 0.1),
            xor_pair=raw.get("xor_pair", False),
            seed=raw.get("seed", 0),
        )


def _class_split(seed: int, name: str, cardinality: int) -> tuple[np.ndarray, np.ndarray]:
    """Fixed random assignment of each value to a target class, both non-empty."""
    assign = derive_rng(seed, "synth", name, "map").integers(0, 2, size=cardinality)
    if assign.sum() == 0:
        assign[cardinality - 1] = 1
    elif assign.sum() == cardinality:
        assign[0] = 0
    return np.flatnonzero(assign == 0), np.flatnonzero(assign == 1)


def _block_columns(spec: SynthSpec, block_index: int, rows: int) -> dict[str, np.ndarray]:
    seed = spec.seed
    target = (
        derive_rng(seed, "synth", TARGET_NAME, block_index).random(rows) < spec.positive_rate
    ).astype(np.int64)
    out: dict[str, np.ndarray] = {}
    for name, info in zip(spec.informative_names, spec.informative):
        vals0, vals1 = _class_split(seed, name, info.cardinality)
        rng = derive_rng(seed, "synth", name, block_index)
        corrupt = rng.random(rows) < info.flip_probability
        uniform = rng.integers(0, info.cardinality, size=rows)
        pick0 = vals0[rng.integers(0, len(vals0), size=rows)]
        pick1 = vals1[rng.integers(0, len(vals1), size=rows)]
        signal = np.where(target == 1, pick1, pick0)
        out[name] = np.where(corrupt, uniform, signal).astype(np.int64)
    for name, card in zip(spec.noise_names, spec.noise_cardinalities):
        out[name] = derive_rng(seed, "synth", name, block_index).integers(
            0, card, size=rows, dtype=np.int64
        )
    if spec.xor_pair:
        a = derive_rng(seed, "synth", XOR_NAMES[0], block_index).integers(
            0, 2, size=rows, dtype=np.int64
        )
        out[XOR_NAMES[0]] = a
        out[XOR_NAMES[1]] = a ^ target
    out[TARGET_NAME] = target
    return out


def generate_columns(spec: SynthSpec) -> tuple[dict[str, np.ndarray], dict]:
    """Materialize all columns in memory; same values as the file writer."""
    blocks: list[dict[str, np.ndarray]] = []
    produced = 0
    index = 0
    while produced < spec.n_rows:
        rows = min(_BLOCK_ROWS, spec.n_rows - produced)
        blocks.append(_block_columns(spec, index, rows))
        produced += rows
        index += 1
    columns = {
        name: np.concatenate([b[name] for b in blocks]) for name in spec.column_names
    }
    return columns, truth_manifest(spec)


def truth_manifest(spec: SynthSpec) -> dict:
    order = sorted(
        range(len(spec.informative)),
        key=lambda i: (spec.informative[i].flip_probability, i),
    )
    names = spec.informative_names
    return {
        "seed": spec.seed,
        "n_rows": spec.n_rows,
        "positive_rate": spec.positive_rate,
        "target": TARGET_NAME,
        "relevant": [names[i] for i in order],
        "flip_probability": {names[i]: spec.informative[i].flip_probability for i in order},
        "cardinality": {
            **{n: s.cardinality for n, s in zip(names, spec.informative)},
            **{n: c for n, c in zip(spec.noise_names, spec.noise_cardinalities)},
        },
        "noise": list(spec.noise_names),
        "xor_pair": list(XOR_NAMES) if spec.xor_pair else None,
    }


def generate(spec: SynthSpec, out_path, manifest_path=None) -> dict:
    """Write the dataset CSV (and optional truth manifest); returns the manifest."""
    out_path = Path(out_path)
    produced = 0
    index = 0
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        while produced < spec.n_rows:
            rows = min(_BLOCK_ROWS, spec.n_rows - produced)
            block = _block_columns(spec, index, rows)
            frame = pd.DataFrame({name: block[name] for name in spec.column_names})
            frame.to_csv(fh, index=False, header=(index == 0), lineterminator="\n")
            produced += rows
            index += 1
    manifest = truth_manifest(spec)
    if manifest_path is not None:
        Path(manifest_path).write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return manifest
