"""Report figures rendered next to the delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_profile", "render_ranking", "render_recall"]

_TOP_N = 30


def render_ranking(result, path) -> None:
    """Horizontal bars of the top-ranked scaled scores, controls hatched."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    control_set = set(result.control_names)
    rows = [
        (result.column_names[i], result.ranking.scaled[i], result.column_names[i] in control_set)
        for i in result.ranking.order[:_TOP_N]
    ]
    names = [r[0] for r in rows][::-1]
    values = [r[1] for r in rows][::-1]
    is_control = [r[2] for r in rows][::-1]

    fig, ax = plt.subplots(figsize=(8, max(3.0, 0.28 * len(rows) + 1.2)))
    colors = ["#d62728" if c else "#1f77b4" for c in is_control]
    ax.barh(np.arange(len(rows)), values, color=colors)
    ax.set_yticks(np.arange(len(rows)))
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xlabel("scaled score")
    ax.set_title(f"top {len(rows)} features ({result.config.heuristic})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_profile(report: dict, path) -> None:
    """Coverage and estimated cardinality per column."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(report)
    coverage = [report[n]["coverage"] for n in names]
    cardinality = [max(1.0, report[n]["estimated_cardinality"]) for n in names]

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, max(3.0, 0.24 * len(names) + 1.0)))
    y = np.arange(len(names))
    ax1.barh(y, coverage, color="#2ca02c")
    ax1.set_yticks(y)
    ax1.set_yticklabels(names, fontsize=7)
    ax1.set_xlim(0, 1.02)
    ax1.set_xlabel("coverage")
    ax2.barh(y, cardinality, color="#9467bd")
    ax2.set_yticks(y)
    ax2.set_yticklabels([])
    ax2.set_xscale("log")
    ax2.set_xlabel("estimated cardinality")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_recall(curve, path) -> None:
    """Recall at every ranking prefix."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    curve = np.asarray(curve, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.arange(1, curve.size + 1), curve, marker="o", markersize=3)
    ax.set_xlabel("prefix length")
    ax.set_ylabel("recall")
    ax.set_ylim(-0.02, 1.05)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
