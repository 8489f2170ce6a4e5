"""End-to-end pipeline runner and report bundle writer.

One pass streams pages through detection, pairing, bot filtering and
classification, writing classified reverts line by line while folding
them into the aggregations; only the time-to-revert column is collected
whole (for the median and the KDE).  A second pass over the classified
file applies the reciprocation screen.  Any stage failure removes the
partial outputs and re-raises with the stage name.
"""

from __future__ import annotations

import hashlib
import json
import platform
import sys
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .classify import (LABELS, NOT_CLASSIFIED, RuleSet, classify,
                       load_default_rules, load_rules,
                       write_proportions_csv)
from .detect import (DEFAULT_RADIUS, closest_pair, detect_reverts,
                     filter_bot_bot, read_reverts_jsonl, revert_to_dict)
from .errors import DataError, PipelineError
from .ingest import IngestStats, parse_jsonl, parse_xml_dump
from .metrics import (SECONDS_PER_DAY, group_key_for, kde_curve, pair_key,
                      read_count_tsv, resolve_group_by,
                      summarize_duration_groups, write_kde_csv,
                      write_pair_histogram_csv, write_revert_share_csv,
                      write_ttr_summary_csv, write_yearly_counts_csv)
from .roster import BotRoster, load_roster
from .screen import ScreenConfig, write_screen_csv

MANIFEST_SCHEMA = "botreverts-run-manifest-v1"


@dataclass
class PipelineConfig:
    input_path: str | Path
    out_dir: str | Path
    input_format: str = "xml"            # "xml" | "jsonl"
    sorted_input: bool = False
    cutoff: datetime | None = None
    wiki: str | None = None
    namespace: int | None = None         # keep only this namespace (0 = articles)
    radius: int = DEFAULT_RADIUS
    include_self: bool = False
    all_reverts: bool = False            # skip the bot filter (baseline runs)
    roster_path: str | Path | None = None
    rules_path: str | Path | None = None  # None -> shipped default rules
    bot_edits_path: str | Path | None = None  # wiki<TAB>count TSV
    group_by: tuple[str, ...] = ("wiki", "year")
    kde_bandwidth: float | None = None
    ttr_days: float = 180.0
    min_pair_reverts: int = 2
    seed: int = 0
    plots: bool = False

    def validate(self) -> None:
        if self.input_format not in ("xml", "jsonl"):
            raise DataError(f"unknown input format {self.input_format!r}")
        if not self.all_reverts and self.roster_path is None:
            raise DataError("a roster is required unless --all-reverts")
        named = [("input", self.input_path), ("roster", self.roster_path),
                 ("rules", self.rules_path),
                 ("bot-edits", self.bot_edits_path)]
        paths: dict[Path, str] = {}
        for role, value in named:
            if value is None or value == "-":
                continue
            resolved = Path(value).resolve()
            if resolved in paths:
                raise DataError(f"{role} and {paths[resolved]} name the "
                                f"same file: {value}")
            paths[resolved] = role
        out_resolved = Path(self.out_dir).resolve()
        if out_resolved in paths:
            raise DataError(f"output directory collides with the "
                            f"{paths[out_resolved]} path")


@dataclass
class PipelineResult:
    out_dir: Path
    files: dict[str, Path]
    revert_count: int
    screened_count: int
    stats: IngestStats
    manifest: dict


def _sha256_of(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fp:
        for chunk in iter(lambda: fp.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class _Run:
    """Tracks created files so a failed run leaves no partial bundle."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.created: list[Path] = []
        self.stage = "setup"

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.created.append(p)
        return p

    def cleanup(self) -> None:
        for p in self.created:
            p.unlink(missing_ok=True)


def _iter_pages(config: PipelineConfig, stats: IngestStats):
    if config.input_format == "xml":
        if config.input_path == "-":
            yield from parse_xml_dump(sys.stdin.buffer, config.cutoff,
                                      config.wiki, stats)
        else:
            yield from parse_xml_dump(config.input_path, config.cutoff,
                                      config.wiki, stats)
    else:
        if config.input_path == "-":
            yield from parse_jsonl(sys.stdin, config.cutoff,
                                   config.sorted_input, stats)
        else:
            yield from parse_jsonl(config.input_path, config.cutoff,
                                   config.sorted_input, stats)


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Run ingest -> detect -> classify -> metrics -> screen, write the bundle.

    Re-running with identical config and inputs reproduces every output
    byte for byte; only the manifest timestamp differs.
    """
    config.validate()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run = _Run(out_dir)
    try:
        return _run_stages(config, run)
    except Exception as exc:
        run.cleanup()
        if isinstance(exc, PipelineError):
            raise
        raise PipelineError(run.stage, exc) from exc


def _run_stages(config: PipelineConfig, run: _Run) -> PipelineResult:
    out_dir = run.out_dir
    stats = IngestStats()

    run.stage = "setup"
    roster = load_roster(config.roster_path) \
        if config.roster_path is not None else BotRoster()
    rules = load_rules(config.rules_path) if config.rules_path is not None \
        else load_default_rules()

    # Pass 1: stream pages into classified reverts, folding everything
    # into running tallies; only duration columns are collected whole.
    run.stage = "detect"
    group_by = resolve_group_by(config.group_by)
    yearly: Counter[tuple[str, int]] = Counter()
    pair_groups: dict[tuple, int] = {}
    wiki_counter: Counter[str] = Counter()
    label_counter: Counter[tuple[str, str]] = Counter()
    group_durations: dict[tuple, list[float]] = {}
    ttr_days_column: list[float] = []
    classified_path = run.path("classified.jsonl")
    total = 0
    with open(classified_path, "w", encoding="utf-8") as out:
        for page in _iter_pages(config, stats):
            if config.namespace is not None and \
                    page.namespace != config.namespace:
                continue
            for event in detect_reverts(page, config.radius):
                pair = closest_pair(event)
                if not config.all_reverts:
                    kept = list(filter_bot_bot([pair], roster,
                                               config.include_self))
                    if not kept:
                        continue
                    pair = kept[0]
                run.stage = "classify"
                rec = classify(pair, rules)
                out.write(json.dumps(revert_to_dict(rec), ensure_ascii=False,
                                     separators=(",", ":")))
                out.write("\n")
                total += 1
                yearly[(rec.wiki, rec.year)] += 1
                pair_groups[pair_key(rec)] = \
                    pair_groups.get(pair_key(rec), 0) + 1
                wiki_counter[rec.wiki] += 1
                label_counter[(rec.wiki, rec.label)] += 1
                days = rec.time_to_revert / SECONDS_PER_DAY
                ttr_days_column.append(days)
                group_durations.setdefault(group_key_for(rec, group_by),
                                           []).append(days)
                run.stage = "detect"

    # Metrics CSVs.
    run.stage = "metrics"
    with open(run.path("yearly_counts.csv"), "w", encoding="utf-8",
              newline="") as fp:
        write_yearly_counts_csv(
            [(w, y, n) for (w, y), n in sorted(yearly.items())], fp)
    with open(run.path("ttr_summary.csv"), "w", encoding="utf-8",
              newline="") as fp:
        write_ttr_summary_csv(summarize_duration_groups(group_durations),
                              group_by, fp)
    histogram = Counter(pair_groups.values())
    with open(run.path("pair_histogram.csv"), "w", encoding="utf-8",
              newline="") as fp:
        write_pair_histogram_csv(histogram, fp)
    curve = None
    if len(set(ttr_days_column)) >= 2:
        curve = kde_curve(ttr_days_column, config.kde_bandwidth)
    with open(run.path("kde.csv"), "w", encoding="utf-8", newline="") as fp:
        write_kde_csv(curve, fp)
    if config.bot_edits_path is not None:
        edit_counts = read_count_tsv(config.bot_edits_path)
        rows = [(wiki, wiki_counter.get(wiki, 0),
                 edit_counts.get(wiki, 0),
                 wiki_counter.get(wiki, 0) / edit_counts[wiki]
                 if edit_counts.get(wiki) else 0.0)
                for wiki in sorted(set(wiki_counter) | set(edit_counts))]
        with open(run.path("revert_share.csv"), "w", encoding="utf-8",
                  newline="") as fp:
            write_revert_share_csv(rows, fp)

    run.stage = "classify"
    proportions_path = run.path("proportions.csv")
    proportions = {wiki: {label: label_counter.get((wiki, label), 0)
                          / wiki_counter[wiki]
                          for label in LABELS}
                   for wiki in sorted(wiki_counter)}
    with open(proportions_path, "w", encoding="utf-8", newline="") as fp:
        write_proportions_csv(proportions, fp)

    # Pass 2: reciprocation screen against the immutable group tally.
    run.stage = "screen"
    screen_config = ScreenConfig.from_days(config.ttr_days,
                                           config.min_pair_reverts)
    screened = 0
    screen_table: Counter[tuple[str, str]] = Counter()
    suspected_path = run.path("suspected.jsonl")
    with open(classified_path, "r", encoding="utf-8") as src, \
            open(suspected_path, "w", encoding="utf-8") as out:
        for revert in read_reverts_jsonl(src):
            if revert.time_to_revert < screen_config.ttr_threshold_seconds \
                    and pair_groups[pair_key(revert)] >= \
                    screen_config.min_pair_reverts:
                out.write(json.dumps(revert_to_dict(revert),
                                     ensure_ascii=False,
                                     separators=(",", ":")))
                out.write("\n")
                screened += 1
                screen_table[(revert.wiki,
                              getattr(revert, "label", NOT_CLASSIFIED))] += 1
    with open(run.path("table3.csv"), "w", encoding="utf-8",
              newline="") as fp:
        write_screen_csv(screen_table, fp)

    run.stage = "report"
    manifest = _build_manifest(config, stats, total, screened, rules)
    manifest_path = run.path("manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fp:
        json.dump(manifest, fp, indent=2, sort_keys=True)
        fp.write("\n")
    render_report(out_dir, manifest)
    run.created.append(out_dir / "REPORT.md")
    if config.plots:
        from .plots import render_plots
        for p in render_plots(out_dir):
            run.created.append(p)

    files = {p.name: p for p in run.created}
    return PipelineResult(out_dir, files, total, screened, stats, manifest)


def _build_manifest(config: PipelineConfig, stats: IngestStats, total: int,
                    screened: int, rules: RuleSet) -> dict:
    input_digest = None
    if config.input_path != "-" and Path(config.input_path).is_file():
        input_digest = _sha256_of(Path(config.input_path))
    roster_digest = None
    if config.roster_path is not None:
        roster_digest = _sha256_of(Path(config.roster_path))
    return {
        "schema": MANIFEST_SCHEMA,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "package_version": __version__,
        "python_version": platform.python_version(),
        "config": {
            "input_path": str(config.input_path),
            "input_format": config.input_format,
            "sorted_input": config.sorted_input,
            "cutoff": config.cutoff.isoformat() if config.cutoff else None,
            "wiki": config.wiki,
            "namespace": config.namespace,
            "radius": config.radius,
            "include_self": config.include_self,
            "all_reverts": config.all_reverts,
            "roster_path": str(config.roster_path)
            if config.roster_path else None,
            "rules_path": str(config.rules_path)
            if config.rules_path else "<default>",
            "group_by": list(config.group_by),
            "kde_bandwidth": config.kde_bandwidth,
            "ttr_days": config.ttr_days,
            "min_pair_reverts": config.min_pair_reverts,
            "seed": config.seed,
            "bot_edits_path": str(config.bot_edits_path)
            if config.bot_edits_path else None,
        },
        "input_sha256": input_digest,
        "roster_sha256": roster_digest,
        "rule_count": len(rules),
        "counts": {"reverts": total, "screened": screened,
                   **stats.as_dict()},
        "outputs": ["classified.jsonl", "suspected.jsonl",
                    "yearly_counts.csv", "ttr_summary.csv",
                    "pair_histogram.csv", "kde.csv", "proportions.csv",
                    "table3.csv", "REPORT.md"]
        + (["revert_share.csv"] if config.bot_edits_path else []),
    }


def _read_csv_rows(path: Path, limit: int = 12) -> tuple[list[str], list]:
    import csv
    with open(path, "r", encoding="utf-8", newline="") as fp:
        reader = csv.reader(fp)
        rows = list(reader)
    if not rows:
        return [], []
    return rows[0], rows[1:limit + 1]


def _md_table(header: list[str], rows: list) -> str:
    if not header:
        return "_empty_\n"
    lines = ["| " + " | ".join(header) + " |",
             "| " + " | ".join("---" for _ in header) + " |"]
    for row in rows:
        lines.append("| " + " | ".join(str(c) for c in row) + " |")
    if not rows:
        lines.append("| " + " | ".join("" for _ in header) + " |")
    return "\n".join(lines) + "\n"


def render_report(out_dir: str | Path, manifest: dict | None = None) -> Path:
    """Write REPORT.md summarizing the bundle's CSV outputs."""
    out_dir = Path(out_dir)
    if manifest is None:
        manifest_path = out_dir / "manifest.json"
        if not manifest_path.is_file():
            raise DataError(f"no manifest.json in {out_dir}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    sections = [
        ("Bot-bot reverts per wiki per year", "yearly_counts.csv"),
        ("Time to revert", "ttr_summary.csv"),
        ("Reverts per bot pair per page", "pair_histogram.csv"),
        ("Revert types per wiki (shares)", "proportions.csv"),
        ("Screened suspected fights per wiki", "table3.csv"),
    ]
    counts = manifest.get("counts", {})
    lines = [
        "# Bot-bot revert report",
        "",
        f"Generated by botreverts {manifest.get('package_version')} — "
        f"{counts.get('reverts', 0)} directed bot-bot reverts, "
        f"{counts.get('screened', 0)} kept by the reciprocation screen.",
        "",
    ]
    for title, name in sections:
        path = out_dir / name
        if not path.is_file():
            continue
        header, rows = _read_csv_rows(path)
        lines.append(f"## {title}")
        lines.append("")
        lines.append(f"Source: `{name}`")
        lines.append("")
        lines.append(_md_table(header, rows))
    lines.append("## Run details")
    lines.append("")
    lines.append("```json")
    lines.append(json.dumps(manifest.get("config", {}), indent=2,
                            sort_keys=True))
    lines.append("```")
    lines.append("")
    report_path = out_dir / "REPORT.md"
    report_path.write_text("\n".join(lines), encoding="utf-8")
    return report_path
