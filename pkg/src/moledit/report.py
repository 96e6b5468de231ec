"""Evaluation report files: metrics JSON, per-record TSV and PNG figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from moledit.evalx import Metrics, RecordResult

RATE_FIELDS = ("validity_rate", "success_rate", "consistency_rate", "execution_accuracy")


def _save(fig: Figure, path: Path) -> Path:
    FigureCanvasAgg(fig)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    return path


def rates_figure(metrics: Metrics, path: Path) -> Path:
    names = [f for f in RATE_FIELDS if getattr(metrics, f) is not None]
    vals = [getattr(metrics, f) for f in names]
    fig = Figure(figsize=(5, 3.2))
    ax = fig.add_subplot()
    bars = ax.bar(range(len(names)), vals, color="#4c72b0")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels([n.replace("_", "\n") for n in names], fontsize=8)
    ax.set_ylim(0, 105)
    ax.set_ylabel("%")
    for b, v in zip(bars, vals):
        ax.text(b.get_x() + b.get_width() / 2, v + 1.5, f"{v:.1f}", ha="center", fontsize=8)
    ax.set_title(f"n = {metrics.n}", fontsize=9)
    return _save(fig, path)


def similarity_figure(results: Sequence[RecordResult], path: Path) -> Path:
    sims = [r.similarity for r in results if r.similarity is not None]
    fig = Figure(figsize=(4.5, 3.2))
    ax = fig.add_subplot()
    ax.hist(sims, bins=20, range=(0, 1), color="#55a868", edgecolor="white")
    ax.set_xlabel("Tanimoto similarity to source (ECFP4)")
    ax.set_ylabel("predictions")
    return _save(fig, path)


def improvement_figure(results: Sequence[RecordResult], path: Path) -> Path:
    pts = [(r.similarity, r.improvement) for r in results if r.similarity is not None and r.improvement is not None]
    fig = Figure(figsize=(4.5, 3.2))
    ax = fig.add_subplot()
    if pts:
        xs, ys = zip(*pts)
        ax.scatter(xs, ys, s=10, alpha=0.7, color="#c44e52")
    ax.axhline(0, color="grey", lw=0.8)
    ax.set_xlim(0, 1)
    ax.set_xlabel("similarity to source")
    ax.set_ylabel("property improvement")
    return _save(fig, path)


def write_records_tsv(results: Sequence[RecordResult], path: Path) -> Path:
    cols = ["id", "valid", "success", "similarity", "improvement", "correct", "consistent", "products", "error"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(cols)
        for r in results:
            w.writerow(
                [
                    r.id,
                    int(r.valid),
                    "" if r.success is None else int(r.success),
                    "" if r.similarity is None else f"{r.similarity:.6f}",
                    "" if r.improvement is None else f"{r.improvement:.6f}",
                    "" if r.correct is None else int(r.correct),
                    "" if r.consistent is None else int(r.consistent),
                    ";".join(r.products),
                    r.error or "",
                ]
            )
    return path


def write_report(metrics: Metrics, results: Sequence[RecordResult], out_dir: str | Path) -> list[Path]:
    """Write everything into ``out_dir`` and return the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    p = out / "metrics.json"
    p.write_text(json.dumps(metrics.to_dict(), indent=2) + "\n")
    written.append(p)
    written.append(write_records_tsv(results, out / "records.tsv"))
    written.append(rates_figure(metrics, out / "rates.png"))
    written.append(similarity_figure(results, out / "similarity.png"))
    if any(r.improvement is not None for r in results):
        written.append(improvement_figure(results, out / "improvement_vs_similarity.png"))
    return written
