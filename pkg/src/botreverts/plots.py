"""Optional SVG renderings of the report CSVs (needs matplotlib)."""

from __future__ import annotations

import csv
from pathlib import Path


def _load_csv(path: Path) -> list[list[str]]:
    with open(path, "r", encoding="utf-8", newline="") as fp:
        return list(csv.reader(fp))


def render_plots(out_dir: str | Path) -> list[Path]:
    """Render fig1 (yearly counts), fig2 (ttr KDE), fig4 (pair histogram)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    written: list[Path] = []

    rows = _load_csv(out_dir / "yearly_counts.csv")[1:]
    if rows:
        fig, ax = plt.subplots(figsize=(7, 4))
        by_wiki: dict[str, list[tuple[int, int]]] = {}
        for wiki, year, count in rows:
            by_wiki.setdefault(wiki, []).append((int(year), int(count)))
        for wiki, points in sorted(by_wiki.items()):
            points.sort()
            ax.plot([p[0] for p in points], [p[1] for p in points],
                    marker="o", label=wiki)
        ax.set_yscale("log")
        ax.set_xlabel("year")
        ax.set_ylabel("bot-bot reverts")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out_dir / "fig1_yearly_counts.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

    rows = _load_csv(out_dir / "kde.csv")[1:]
    if rows:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot([float(r[0]) for r in rows], [float(r[1]) for r in rows])
        ax.set_xlabel("log10(days to revert)")
        ax.set_ylabel("density")
        fig.tight_layout()
        path = out_dir / "fig2_ttr_kde.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

    rows = _load_csv(out_dir / "pair_histogram.csv")[1:]
    if rows:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.bar([int(r[0]) for r in rows], [int(r[1]) for r in rows])
        ax.set_yscale("log")
        ax.set_xlabel("reverts per bot pair per page")
        ax.set_ylabel("pair-page groups")
        fig.tight_layout()
        path = out_dir / "fig4_pair_histogram.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

    return written
