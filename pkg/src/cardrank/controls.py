"""Built-in sanity-check features with analytically known expected scores.

Three kinds are injected per batch: constants (score exactly zero), uniform
noise of chosen cardinality (chance-corrected score near zero regardless of
cardinality, which is exactly what the normalization must achieve), and a
copy of the target (maximal score).  They ride along through scoring and
appear in reports flagged as controls, but are never written into user data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._streams import derive_rng
from .schema_ingest import EncodedBatch

__all__ = [
    "CONTROL_PREFIX",
    "ControlSpec",
    "build_controls",
    "default_control_specs",
    "make_random_control",
    "make_target_leak_control",
]

CONTROL_PREFIX = "CONTROL_"


@dataclass(frozen=True)
class ControlSpec:
    """One synthetic diagnostic feature."""

    kind: str
    name: str
    cardinality: int | None = None

    def __post_init__(self):
        if self.kind not in ("random_uniform", "constant", "target_leak"):
            raise ValueError(f"unknown control kind: {self.kind!r}")
        if not self.name.startswith(CONTROL_PREFIX):
            raise ValueError(f"control names must start with {CONTROL_PREFIX!r}")
        if self.kind == "random_uniform":
            if self.cardinality is None or self.cardinality < 1:
                raise ValueError("random_uniform controls need cardinality >= 1")
        elif self.kind == "constant":
            if self.cardinality not in (None, 1):
                raise ValueError("constant controls have cardinality 1")
        elif self.cardinality is not None:
            raise ValueError("target_leak controls inherit the target's cardinality")


def default_control_specs(batch_size: int) -> tuple[ControlSpec, ...]:
    """Default per-run control set spanning the cardinality spectrum."""
    cards = [2, 10, 100, max(2, batch_size // 2)]
    specs = [
        ControlSpec(kind="constant", name=f"{CONTROL_PREFIX}constant", cardinality=1),
        ControlSpec(kind="target_leak", name=f"{CONTROL_PREFIX}target_leak"),
    ]
    seen = set()
    for c in cards:
        if c in seen:
            continue
        seen.add(c)
        specs.append(
            ControlSpec(
                kind="random_uniform",
                name=f"{CONTROL_PREFIX}uniform_c{c}",
                cardinality=c,
            )
        )
    return tuple(specs)


def make_random_control(
    cardinality: int,
    row_count: int,
    stream_key: tuple[int, int, str],
) -> np.ndarray:
    """I.i.d. uniform codes over [0, cardinality), deterministic per key."""
    if cardinality < 1:
        raise ValueError(f"cardinality must be >= 1, got {cardinality}")
    if row_count < 1:
        raise ValueError(f"row_count must be >= 1, got {row_count}")
    seed, batch_index, name = stream_key
    rng = derive_rng(seed, "control", batch_index, name)
    return rng.integers(0, cardinality, size=row_count, dtype=np.int64)


def make_target_leak_control(target_codes: np.ndarray) -> np.ndarray:
    """Exact copy of the target codes."""
    return np.array(target_codes, dtype=np.int64, copy=True)


def build_controls(
    specs: tuple[ControlSpec, ...],
    batch: EncodedBatch,
    seed: int,
) -> dict[str, tuple[np.ndarray, int]]:
    """Materialize control code arrays for one batch.

    Returns name -> (dense codes, batch cardinality).  Uniform draws are
    re-encoded densely so their realized cardinality matches the code range,
    same as any encoded column.
    """
    out: dict[str, tuple[np.ndarray, int]] = {}
    for spec in specs:
        if spec.kind == "constant":
            codes = np.zeros(batch.row_count, dtype=np.int64)
            card = 1
        elif spec.kind == "target_leak":
            codes = make_target_leak_control(batch.target_codes)
            card = batch.target_cardinality
        else:
            raw = make_random_control(
                spec.cardinality, batch.row_count, (seed, batch.batch_index, spec.name)
            )
            uniq, codes = np.unique(raw, return_inverse=True)
            codes = codes.astype(np.int64)
            card = len(uniq)
        out[spec.name] = (codes, card)
    return out
