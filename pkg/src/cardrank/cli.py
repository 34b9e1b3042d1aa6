"""Command-line interface: rank, profile, evaluate, synth.

Every flag can also be set through an environment variable with the
CARDRANK_ prefix (flag --batch-size becomes CARDRANK_BATCH_SIZE); explicit
flags win.  Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .evaluation import RankingFile, recall_curve
from .pipeline import PipelineError, RunConfig, run_profile, run_rank
from .schema_ingest import CsvFormatError, SchemaError
from .synthgen import SynthSpec, generate

__all__ = ["main"]

ENV_PREFIX = "CARDRANK_"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _env(name: str, fallback):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return fallback
    if isinstance(fallback, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(fallback, int):
        return int(raw)
    if isinstance(fallback, float):
        return float(raw)
    return raw


def _add_rank_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="path to the CSV/TSV dataset")
    p.add_argument("--format", choices=("csv", "tsv"), default=_env("format", "csv"))
    p.add_argument("--target", required=True, help="name of the target column")
    p.add_argument("--ignore", action="append", default=[], help="column to skip (repeatable)")
    p.add_argument("--missing-token", default=_env("missing-token", ""))
    p.add_argument("--batch-size", type=int, default=_env("batch-size", 4196))
    p.add_argument("--noise-samples", type=int, default=_env("noise-samples", 8),
                   help="null samples per scored pair")
    p.add_argument("--null-mode", choices=("permutation", "uniform_cardinality"),
                   default=_env("null-mode", "permutation"))
    p.add_argument("--buffer-size", type=int, default=_env("buffer-size", 512),
                   help="interaction candidates per batch (0 disables interactions)")
    p.add_argument("--interaction-order", type=int, choices=(2, 3),
                   default=_env("interaction-order", 2))
    p.add_argument("--heuristic", choices=("mi_raw", "cardmi", "mrmr", "3mr"),
                   default=_env("heuristic", "cardmi"))
    p.add_argument("--alpha", type=float, default=_env("alpha", 0.1))
    p.add_argument("--beta", type=float, default=_env("beta", 0.2))
    p.add_argument("--sf", choices=("mean", "median", "p90", "sum"),
                   default=_env("sf", "mean"))
    p.add_argument("--aggregate", choices=("mean", "median", "sum"),
                   default=_env("aggregate", "mean"))
    p.add_argument("--truncate", action="store_true", default=_env("truncate", False),
                   help="clamp aggregated scores to [0, 1]")
    p.add_argument("--truncate-per-batch", action="store_true",
                   default=_env("truncate-per-batch", False))
    p.add_argument("--seed", type=int, default=_env("seed", 0))
    p.add_argument("--out", default=_env("out", "cardrank_out"), help="output directory")
    p.add_argument("--workers", type=int, default=_env("workers", 1))
    p.add_argument("--interaction-measure", choices=("cardmi", "mi_raw"),
                   default=_env("interaction-measure", "cardmi"))
    p.add_argument("--min-pair-count", type=int, default=_env("min-pair-count", 3))
    p.add_argument("--control-band", type=float, default=_env("control-band", 0.01))
    p.add_argument("--no-controls", action="store_true", default=_env("no-controls", False))
    p.add_argument("--sketch-precision", type=int, default=_env("sketch-precision", 14))
    p.add_argument("--top-k", type=int, default=_env("top-k", 10))
    p.add_argument("--no-plots", action="store_true", default=_env("no-plots", False))


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        input_path=args.input,
        format=args.format,
        target=args.target,
        ignore=tuple(args.ignore),
        missing_token=args.missing_token,
        batch_size=args.batch_size,
        noise_samples=args.noise_samples,
        null_mode=args.null_mode,
        buffer_size=args.buffer_size,
        interaction_order=args.interaction_order,
        heuristic=args.heuristic,
        alpha=args.alpha,
        beta=args.beta,
        sf=args.sf,
        aggregate_method=args.aggregate,
        truncate=args.truncate,
        truncate_per_batch=args.truncate_per_batch,
        seed=args.seed,
        output_dir=args.out,
        workers=args.workers,
        interaction_measure=args.interaction_measure,
        min_pair_count=args.min_pair_count,
        control_band=args.control_band,
        include_controls=not args.no_controls,
        sketch_precision=args.sketch_precision,
        top_k=args.top_k,
        plots=not args.no_plots,
    )


def _cmd_rank(args) -> int:
    cfg = _config_from_args(args)
    result = run_rank(cfg)
    report_names = result.ranked_names()
    print(f"ranked {len(result.feature_names)} features over {result.n_batches} batches")
    for pos, name in enumerate(report_names[:10], start=1):
        idx = result.ranking.order[pos - 1]
        print(f"  {pos:2d}. {name}  scaled={result.ranking.scaled[idx]:.4f}")
    print(f"reports written to {cfg.output_dir}")
    return 0


def _cmd_profile(args) -> int:
    cfg = _config_from_args(args)
    profiler = run_profile(cfg)
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    report = profiler.report()
    (outdir / "profile.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    if cfg.plots:
        from . import figures

        figures.render_profile(report, outdir / "figures" / "profile.png")
    print(f"profiled {len(report)} columns; report written to {outdir / 'profile.json'}")
    return 0


def _cmd_evaluate(args) -> int:
    reference = RankingFile.load(args.reference)
    candidate = RankingFile.load(args.candidate)
    curve = recall_curve(reference, candidate)
    total = float(curve.sum())
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = ["i\trecall"]
    rows.extend(f"{i}\t{format(v, '.17g')}" for i, v in enumerate(curve, start=1))
    (outdir / "recall_curve.tsv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    if not args.no_plots:
        from . import figures

        figures.render_recall(curve, outdir / "figures" / "recall_curve.png")
    print(f"R = {total:.6f} over {curve.size} prefixes")
    return 0


def _cmd_synth(args) -> int:
    spec = SynthSpec.from_json(args.spec)
    manifest = generate(spec, args.out, args.manifest)
    print(f"wrote {spec.n_rows} rows x {len(spec.column_names)} columns to {args.out}")
    if args.manifest:
        print(f"truth manifest written to {args.manifest}")
    else:
        print(json.dumps(manifest, indent=2, sort_keys=True))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="cardrank", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_rank = sub.add_parser("rank", help="rank features of a delimited dataset")
    _add_rank_flags(p_rank)
    p_rank.set_defaults(func=_cmd_rank)

    p_profile = sub.add_parser("profile", help="coverage and cardinality profile only")
    _add_rank_flags(p_profile)
    p_profile.set_defaults(func=_cmd_profile)

    p_eval = sub.add_parser("evaluate", help="compare a candidate ranking to a reference")
    p_eval.add_argument("--reference", required=True, help="reference ranking file, one name per line")
    p_eval.add_argument("--candidate", required=True, help="candidate ranking file")
    p_eval.add_argument("--out", default=_env("out", "."), help="directory for recall_curve.tsv")
    p_eval.add_argument("--no-plots", action="store_true", default=_env("no-plots", False))
    p_eval.set_defaults(func=_cmd_evaluate)

    p_synth = sub.add_parser("synth", help="generate a planted-signal dataset")
    p_synth.add_argument("--spec", required=True, help="JSON spec file")
    p_synth.add_argument("--out", required=True, help="output CSV path")
    p_synth.add_argument("--manifest", default=None, help="where to write the truth manifest")
    p_synth.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, CsvFormatError, PipelineError) as exc:
        print(f"cardrank: data error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"cardrank: data error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"cardrank: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
