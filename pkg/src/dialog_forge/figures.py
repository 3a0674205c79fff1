"""Render a stats report's distributions to PNG figures.

Kept out of the stats module so the report itself stays a pure data pass;
only the CLI report path imports this (and with it matplotlib).
"""

from __future__ import annotations

from pathlib import Path

from .stats import StatsReport


def _bar(ax, hist: dict, title: str, key=str):
    names = sorted(hist, key=key)
    values = [hist[name] for name in names]
    ax.bar(range(len(names)), values, color="#4878a8")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels([str(n) for n in names], rotation=60, ha="right", fontsize=7)
    ax.set_title(title)
    ax.set_ylabel("questions")


def render_figures(report: StatsReport, outdir) -> list[Path]:
    """Write one PNG per distribution; returns the created paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    jobs = [
        ("caption_families.png", report.caption_families, "Caption families", str),
        ("question_categories.png", report.question_categories, "Question categories", str),
        ("question_types.png", report.question_types, "Question types", str),
        ("answers.png", report.answers, "Answers", str),
        ("coref_distances.png", report.coref_distances, "Coreference distances", int),
        ("dependency_kinds.png", report.dependency_kinds, "History dependency", str),
    ]
    paths = []
    for filename, hist, title, key in jobs:
        if not hist:
            continue
        wide = len(hist) > 10
        fig, ax = plt.subplots(figsize=(10 if wide else 5, 3.2))
        _bar(ax, hist, title, key)
        fig.tight_layout()
        path = outdir / filename
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths
