"""End-to-end run orchestration: ingest, score, aggregate, rank, report.

A run streams encoded batches from disk (or any batch iterable), scores every
feature and injected control against the target per batch, accumulates the
sampled interaction matrices, and reduces everything into a final ranking
plus TSV/JSON reports.  All per-batch work is a pure function of the batch
and the run seed, so batches may be scored by a pool of workers and folded
back in batch order with bit-identical results.
"""

from __future__ import annotations

import dataclasses
import json
import warnings
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
import pandas as pd

from .controls import ControlSpec, build_controls, default_control_specs
from .interactions import (
    FeatureUniverse,
    PairAccumulator,
    accumulate_redundancy,
    accumulate_relation,
    combine_detailed,
    sample_buffer,
)
from .mi_core import NullSampler, cardmi_batch
from .profiling import FeatureProfiler
from .ranking import (
    RankingResult,
    ScoreAccumulator,
    ThreeMRConfig,
    aggregate,
    rank_3mr,
    rank_by_score,
)
from .schema_ingest import EncodedBatch, Schema, read_batches

__all__ = [
    "PipelineError",
    "RunConfig",
    "RunResult",
    "batches_from_columns",
    "rank_stream",
    "run_profile",
    "run_rank",
    "write_outputs",
]

HEURISTICS = ("mi_raw", "cardmi", "mrmr", "3mr")


class PipelineError(ValueError):
    """Run-level data problem (empty input, bad configuration against data)."""


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; serialized verbatim into run_config.json."""

    input_path: str = ""
    format: str = "csv"
    target: str = ""
    ignore: tuple[str, ...] = ()
    missing_token: str = ""
    batch_size: int = 4196
    noise_samples: int = 8
    null_mode: str = "permutation"
    buffer_size: int = 512
    interaction_order: int = 2
    heuristic: str = "cardmi"
    alpha: float = 0.1
    beta: float = 0.2
    sf: str = "mean"
    aggregate_method: str = "mean"
    truncate: bool = False
    truncate_per_batch: bool = False
    seed: int = 0
    output_dir: str = "cardrank_out"
    workers: int = 1
    interaction_measure: str = "cardmi"
    min_pair_count: int = 3
    control_band: float = 0.01
    include_controls: bool = True
    sketch_precision: int = 14
    top_k: int = 10
    plots: bool = True

    def __post_init__(self):
        if self.heuristic not in HEURISTICS:
            raise ValueError(f"heuristic must be one of {HEURISTICS}, got {self.heuristic!r}")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.noise_samples < 1:
            raise ValueError("noise_samples must be >= 1")
        if self.interaction_order not in (2, 3):
            raise ValueError("interaction_order must be 2 or 3")
        if self.null_mode not in ("permutation", "uniform_cardinality"):
            raise ValueError(f"unknown null_mode {self.null_mode!r}")
        if self.interaction_measure not in ("cardmi", "mi_raw"):
            raise ValueError(f"unknown interaction_measure {self.interaction_measure!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.buffer_size < 0:
            raise ValueError("buffer_size must be >= 0")

    @property
    def hash_seed(self) -> int:
        return self.seed


@dataclass
class _BatchResult:
    batch_index: int
    singles_raw: dict
    singles_norm: dict
    redundancy: PairAccumulator
    relation: PairAccumulator
    triples: dict
    profiler: FeatureProfiler | None
    collisions: int


@dataclass
class RunResult:
    """Aggregated outcome of a run, ready for reporting."""

    config: RunConfig
    feature_names: tuple[str, ...]
    control_specs: tuple[ControlSpec, ...]
    ranking: RankingResult
    column_names: tuple[str, ...]
    cardmi_scores: np.ndarray
    raw_scores: np.ndarray
    cardmi_values: dict
    redundancy: PairAccumulator
    relation: PairAccumulator
    triples: dict
    profiler: FeatureProfiler | None
    n_batches: int
    hash_collisions: int

    @property
    def control_names(self) -> tuple[str, ...]:
        return tuple(spec.name for spec in self.control_specs)

    def ranked_names(self) -> list[str]:
        return [self.column_names[i] for i in self.ranking.order]


def batches_from_columns(
    columns: dict[str, np.ndarray],
    target_name: str,
    batch_size: int,
    feature_names: tuple[str, ...] | None = None,
) -> Iterator[EncodedBatch]:
    """Encode in-memory columns into batches, mirroring the file reader."""
    names = list(columns)
    if feature_names is None:
        feature_names = tuple(n for n in names if n != target_name)
    n_rows = len(columns[target_name])
    start = 0
    batch_index = 0
    while start < n_rows:
        stop = min(start + batch_size, n_rows)
        codes: dict[str, np.ndarray] = {}
        cards: dict[str, int] = {}
        uniques: dict[str, np.ndarray] = {}
        counts: dict[str, np.ndarray] = {}
        missing: dict[str, int] = {}
        for name in list(feature_names) + [target_name]:
            sliced = np.asarray(columns[name][start:stop])
            c, uniq = pd.factorize(sliced, use_na_sentinel=False)
            codes[name] = c.astype(np.int64)
            cards[name] = len(uniq)
            uniques[name] = np.asarray(uniq, dtype=object)
            counts[name] = np.bincount(codes[name], minlength=len(uniq))
            missing[name] = 0
        yield EncodedBatch(
            batch_index=batch_index,
            row_count=stop - start,
            feature_names=tuple(feature_names),
            target_name=target_name,
            codes=codes,
            cardinalities=cards,
            uniques=uniques,
            counts=counts,
            missing_counts=missing,
        )
        start = stop
        batch_index += 1


def _score_batch(batch: EncodedBatch, cfg: RunConfig, specs: tuple[ControlSpec, ...],
                 profile: bool) -> _BatchResult:
    target = batch.target_codes
    singles_raw: dict = {}
    singles_norm: dict = {}

    scored: list[tuple[str, np.ndarray]] = [
        (name, batch.codes[name]) for name in batch.feature_names
    ]
    if specs:
        for name, (codes, _card) in build_controls(specs, batch, cfg.seed).items():
            scored.append((name, codes))

    for name, codes in scored:
        sampler = NullSampler(
            mode=cfg.null_mode,
            num_samples=cfg.noise_samples,
            seed=cfg.seed,
            batch_index=batch.batch_index,
            pair=("single", name),
        )
        score = cardmi_batch(target, codes, sampler)
        raw, norm = score.raw_mi, score.normalized
        if cfg.truncate_per_batch:
            raw = min(1.0, max(0.0, raw))
            norm = min(1.0, max(0.0, norm))
        singles_raw[name] = raw
        singles_norm[name] = norm

    redundancy = PairAccumulator()
    relation = PairAccumulator()
    triples: dict = {}
    collisions = [0]
    if cfg.buffer_size > 0 and len(batch.feature_names) >= 2:
        universe = FeatureUniverse(len(batch.feature_names), 2)
        buffer = sample_buffer(universe, cfg.buffer_size, batch.batch_index, cfg.seed)
        accumulate_redundancy(
            batch, buffer, redundancy,
            seed=cfg.seed, null_mode=cfg.null_mode,
            num_samples=cfg.noise_samples, measure=cfg.interaction_measure,
        )
        accumulate_relation(
            batch, buffer, relation,
            hash_seed=cfg.hash_seed, seed=cfg.seed, null_mode=cfg.null_mode,
            num_samples=cfg.noise_samples, measure=cfg.interaction_measure,
            collision_counter=collisions,
        )
        if cfg.interaction_order == 3 and len(batch.feature_names) >= 3:
            tri_universe = FeatureUniverse(len(batch.feature_names), 3)
            rng_key_batch = batch.batch_index
            tri_buffer = sample_buffer(
                tri_universe, cfg.buffer_size, rng_key_batch + 1_000_003, cfg.seed
            )
            for cand in tri_buffer.selected:
                combined, _, coll = combine_detailed(batch, cand.members, cfg.hash_seed)
                collisions[0] += coll
                sampler = NullSampler(
                    mode=cfg.null_mode, num_samples=cfg.noise_samples,
                    seed=cfg.seed, batch_index=batch.batch_index,
                    pair=("relation3",) + cand.members,
                )
                score = cardmi_batch(target, combined, sampler)
                value = score.raw_mi if cfg.interaction_measure == "mi_raw" else score.normalized
                cell = triples.setdefault(cand.members, [0.0, 0])
                cell[0] += value
                cell[1] += 1

    profiler = None
    if profile:
        profiler = FeatureProfiler(
            tuple(batch.feature_names) + (batch.target_name,),
            precision=cfg.sketch_precision,
            top_k=cfg.top_k,
        )
        profiler.update(batch)

    return _BatchResult(
        batch_index=batch.batch_index,
        singles_raw=singles_raw,
        singles_norm=singles_norm,
        redundancy=redundancy,
        relation=relation,
        triples=triples,
        profiler=profiler,
        collisions=collisions[0],
    )


def _batch_results(
    batches: Iterable[EncodedBatch], cfg: RunConfig, specs: tuple[ControlSpec, ...],
    profile: bool,
) -> Iterator[_BatchResult]:
    if cfg.workers == 1:
        for batch in batches:
            yield _score_batch(batch, cfg, specs, profile)
        return
    # bounded sliding window keeps memory independent of batch count while
    # preserving batch order for deterministic merging
    window = 2 * cfg.workers
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        pending = deque()
        iterator = iter(batches)
        exhausted = False
        while True:
            while not exhausted and len(pending) < window:
                try:
                    batch = next(iterator)
                except StopIteration:
                    exhausted = True
                    break
                pending.append(pool.submit(_score_batch, batch, cfg, specs, profile))
            if not pending:
                break
            yield pending.popleft().result()


def rank_stream(
    batches: Iterable[EncodedBatch],
    feature_names: tuple[str, ...],
    cfg: RunConfig,
    profile: bool = True,
) -> RunResult:
    """Score a batch stream and reduce it into a ranked RunResult."""
    specs = default_control_specs(cfg.batch_size) if cfg.include_controls else ()
    reserved = [n for n in feature_names if n.startswith("CONTROL_")]
    if reserved:
        raise PipelineError(f"feature names use the reserved control prefix: {reserved}")

    acc_raw = ScoreAccumulator()
    acc_norm = ScoreAccumulator()
    redundancy = PairAccumulator()
    relation = PairAccumulator()
    triples: dict = {}
    profiler: FeatureProfiler | None = None
    collisions = 0
    n_batches = 0

    for result in _batch_results(batches, cfg, specs, profile):
        n_batches += 1
        for name, value in result.singles_raw.items():
            acc_raw.add(name, value)
        for name, value in result.singles_norm.items():
            acc_norm.add(name, value)
        redundancy.merge(result.redundancy)
        relation.merge(result.relation)
        for key, (s, c) in result.triples.items():
            cell = triples.setdefault(key, [0.0, 0])
            cell[0] += s
            cell[1] += c
        collisions += result.collisions
        if result.profiler is not None:
            if profiler is None:
                profiler = result.profiler
            else:
                profiler.merge(result.profiler)

    if n_batches == 0:
        raise PipelineError("input contains no data rows")

    column_names = tuple(feature_names) + tuple(s.name for s in specs)
    cardmi_scores = np.array(
        [
            aggregate(acc_norm.values(n), cfg.aggregate_method, cfg.truncate)
            for n in column_names
        ]
    )
    raw_scores = np.array(
        [
            aggregate(acc_raw.values(n), cfg.aggregate_method, cfg.truncate)
            for n in column_names
        ]
    )

    snapshot = dataclasses.asdict(cfg)
    if cfg.heuristic == "mi_raw":
        ranking = rank_by_score(raw_scores, heuristic="mi_raw", config=snapshot)
    elif cfg.heuristic == "cardmi":
        ranking = rank_by_score(cardmi_scores, heuristic="cardmi", config=snapshot)
    else:
        if len(redundancy) == 0 and len(relation) == 0:
            warnings.warn(
                f"heuristic {cfg.heuristic!r} requested but no interaction entries were "
                "accumulated; degrading to the score-only ordering",
                stacklevel=2,
            )
            ranking = rank_by_score(cardmi_scores, heuristic=cfg.heuristic, config=snapshot)
        else:
            beta = 0.0 if cfg.heuristic == "mrmr" else cfg.beta
            three_cfg = ThreeMRConfig(alpha=cfg.alpha, beta=beta, sf=cfg.sf)
            ranking = rank_3mr(
                cardmi_scores, redundancy, relation, three_cfg,
                heuristic=cfg.heuristic, config=snapshot,
            )

    return RunResult(
        config=cfg,
        feature_names=tuple(feature_names),
        control_specs=specs,
        ranking=ranking,
        column_names=column_names,
        cardmi_scores=cardmi_scores,
        raw_scores=raw_scores,
        cardmi_values={n: list(acc_norm.values(n)) for n in column_names},
        redundancy=redundancy,
        relation=relation,
        triples=triples,
        profiler=profiler,
        n_batches=n_batches,
        hash_collisions=collisions,
    )


def run_rank(cfg: RunConfig) -> RunResult:
    """File-based run: ingest, rank, write all artifacts to the output dir."""
    schema = _build_schema(cfg)
    batches = read_batches(cfg.input_path, cfg.format, schema, cfg.batch_size)
    result = rank_stream(batches, schema.feature_names, cfg, profile=True)
    write_outputs(result, Path(cfg.output_dir))
    return result


def run_profile(cfg: RunConfig) -> FeatureProfiler:
    """Profile-only run: coverage and cardinality sketches, no scoring."""
    schema = _build_schema(cfg)
    profiler: FeatureProfiler | None = None
    for batch in read_batches(cfg.input_path, cfg.format, schema, cfg.batch_size):
        if profiler is None:
            profiler = FeatureProfiler(
                tuple(batch.feature_names) + (batch.target_name,),
                precision=cfg.sketch_precision,
                top_k=cfg.top_k,
            )
        profiler.update(batch)
    if profiler is None:
        raise PipelineError("input contains no data rows")
    return profiler


def _build_schema(cfg: RunConfig) -> Schema:
    if not cfg.target:
        raise PipelineError("a target column must be named")
    from .schema_ingest import _read_header  # single authoritative header parse

    with open(cfg.input_path, "rb") as fh:
        header = _read_header(fh, {"csv": ",", "tsv": "\t"}[cfg.format])
    return Schema.from_header(
        header, target=cfg.target, ignore=tuple(cfg.ignore), missing_token=cfg.missing_token
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_outputs(result: RunResult, outdir: Path) -> None:
    """Write ranking.tsv, matrices, profile, controls report and figures."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = result.config

    control_set = set(result.control_names)
    lines = ["rank\tfeature\traw_aggregate\tscaled_score\tis_control\theuristic"]
    for rank, idx in enumerate(result.ranking.order, start=1):
        name = result.column_names[idx]
        base = (
            result.raw_scores[idx]
            if cfg.heuristic == "mi_raw"
            else result.cardmi_scores[idx]
        )
        lines.append(
            "\t".join(
                [
                    str(rank),
                    name,
                    _fmt(base),
                    _fmt(result.ranking.scaled[idx]),
                    str(name in control_set).lower(),
                    cfg.heuristic,
                ]
            )
        )
    (outdir / "ranking.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    for fname, matrix in (("redundancy.tsv", result.redundancy), ("relations.tsv", result.relation)):
        rows = ["i\tj\tscore\tcount\tlow_confidence"]
        for (i, j), entry in matrix.finalize(cfg.min_pair_count).items():
            rows.append(
                "\t".join(
                    [
                        result.feature_names[i],
                        result.feature_names[j],
                        _fmt(entry.score),
                        str(entry.count),
                        str(entry.low_confidence).lower(),
                    ]
                )
            )
        (outdir / fname).write_text("\n".join(rows) + "\n", encoding="utf-8")

    if result.triples:
        rows = ["members\tscore\tcount"]
        for key in sorted(result.triples):
            s, c = result.triples[key]
            name = "AND".join(result.feature_names[i] for i in key)
            rows.append("\t".join([name, _fmt(s / c), str(c)]))
        (outdir / "relations3.tsv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    if result.profiler is not None:
        (outdir / "profile.json").write_text(
            json.dumps(result.profiler.report(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    (outdir / "controls_report.json").write_text(
        json.dumps(controls_report(result), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    (outdir / "run_config.json").write_text(
        json.dumps(dataclasses.asdict(cfg), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    if cfg.plots:
        from . import figures

        figures.render_ranking(result, outdir / "figures" / "scores.png")
        if result.profiler is not None:
            figures.render_profile(result.profiler.report(), outdir / "figures" / "profile.png")


def controls_report(result: RunResult) -> dict:
    """Pass/fail summary of every control against its expected band."""
    cfg = result.config
    name_to_idx = {n: i for i, n in enumerate(result.column_names)}
    rank_of = {idx: pos + 1 for pos, idx in enumerate(result.ranking.order)}
    entries = []
    bands_pass = True
    for spec in result.control_specs:
        idx = name_to_idx[spec.name]
        agg = float(result.cardmi_scores[idx])
        scaled = float(result.ranking.scaled[idx])
        entry = {
            "name": spec.name,
            "kind": spec.kind,
            "cardinality": spec.cardinality,
            "aggregated_cardmi": agg,
            "aggregated_raw_mi": float(result.raw_scores[idx]),
            "scaled_score": scaled,
            "rank": rank_of[idx],
        }
        if spec.kind == "random_uniform":
            entry["within_band"] = abs(agg) <= cfg.control_band
            bands_pass &= entry["within_band"]
        elif spec.kind == "target_leak":
            entry["is_max_scaled"] = scaled == 1.0
            bands_pass &= entry["is_max_scaled"]
        else:
            entry["within_band"] = abs(agg) <= cfg.control_band
            bands_pass &= entry["within_band"]
        entries.append(entry)
    low_conf = sum(
        1 for e in result.redundancy.finalize(cfg.min_pair_count).values() if e.low_confidence
    )
    universe = FeatureUniverse(len(result.feature_names), 2) if len(result.feature_names) > 1 else None
    sampled = len(result.redundancy)
    return {
        "n_batches": result.n_batches,
        "band_nats": cfg.control_band,
        "sufficient_batches": result.n_batches >= 50,
        "controls": entries,
        "bands_pass": bands_pass,
        "hash_collisions": result.hash_collisions,
        "low_confidence_pairs": low_conf,
        "pairs_sampled": sampled,
        "pairs_never_sampled": (universe.size - sampled) if universe else 0,
    }
