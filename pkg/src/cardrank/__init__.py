"""Streaming feature ranking for sparse categorical data.

Scores single features and hashed feature interactions with a
cardinality-corrected mutual-information measure accumulated over fixed-size
batches, and orders features either myopically or with a greedy that trades
off redundancy against joint relevance.  Designed as a fast pre-filter in
front of expensive model search.
"""

from .controls import ControlSpec, default_control_specs
from .evaluation import RankingFile, recall_at, recall_curve, recall_sum
from .interactions import (
    CombinedFeature,
    FeatureBuffer,
    FeatureUniverse,
    PairAccumulator,
    combine,
    sample_buffer,
)
from .mi_core import BatchScore, NullSampler, cardmi_batch, entropy, mutual_information, null_expectation
from .pipeline import RunConfig, RunResult, batches_from_columns, rank_stream, run_rank
from .profiling import CardinalitySketch, CoverageStats, FeatureProfiler
from .ranking import (
    RankingResult,
    ScoreAccumulator,
    ThreeMRConfig,
    aggregate,
    rank_3mr,
    rank_by_score,
    scale_scores,
)
from .schema_ingest import EncodedBatch, Schema, encode_column, read_batches
from .synthgen import InformativeSpec, SynthSpec, generate, generate_columns

__version__ = "0.1.0"

__all__ = [
    "BatchScore",
    "CardinalitySketch",
    "CombinedFeature",
    "ControlSpec",
    "CoverageStats",
    "EncodedBatch",
    "FeatureBuffer",
    "FeatureProfiler",
    "FeatureUniverse",
    "InformativeSpec",
    "NullSampler",
    "PairAccumulator",
    "RankingFile",
    "RankingResult",
    "RunConfig",
    "RunResult",
    "Schema",
    "ScoreAccumulator",
    "SynthSpec",
    "ThreeMRConfig",
    "aggregate",
    "batches_from_columns",
    "cardmi_batch",
    "combine",
    "default_control_specs",
    "encode_column",
    "entropy",
    "generate",
    "generate_columns",
    "mutual_information",
    "null_expectation",
    "rank_3mr",
    "rank_by_score",
    "rank_stream",
    "read_batches",
    "recall_at",
    "recall_curve",
    "recall_sum",
    "run_rank",
    "sample_buffer",
    "scale_scores",
    "__version__",
]
