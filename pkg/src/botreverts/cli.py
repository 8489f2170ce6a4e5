"""Command-line entry point.

Subcommands mirror the pipeline stages (ingest, roster, detect, metrics,
classify, screen) plus synth/score for the verification harness and
report for the end-to-end run.  Exit codes: 0 success, 1 usage error,
2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from pathlib import Path

from . import __version__
from .classify import (classify_all, label_counts, LABELS,
                       load_default_rules, load_rules, sample_for_validation,
                       write_proportions_csv)
from .detect import (DEFAULT_RADIUS, closest_pair, detect_reverts,
                     filter_bot_bot, read_reverts_jsonl, write_reverts_jsonl)
from .errors import BotRevertsError, DataError
from .ingest import (IngestStats, parse_jsonl, parse_timestamp,
                     parse_xml_dump, write_revisions_jsonl)
from .metrics import (pair_histogram, pair_page_stats, read_count_tsv,
                      resolve_group_by, revert_share_of_bot_edits, ttr_kde,
                      ttr_summary, write_kde_csv, write_pair_histogram_csv,
                      write_revert_share_csv, write_ttr_summary_csv,
                      write_yearly_counts_csv, yearly_counts)
from .report import PipelineConfig, render_report, run_pipeline
from .roster import load_roster, merge_sources, write_roster_jsonl
from .screen import ScreenConfig, screen, write_screen_csv
from .synth import generate, load_truth, scenario, score as score_stages

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _cutoff(value: str):
    try:
        return parse_timestamp(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad timestamp {value!r}: {exc}")


def _group_by(value: str) -> tuple[str, ...]:
    try:
        return resolve_group_by([t for t in value.split(",") if t])
    except DataError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _open_in(path: str, binary: bool = False):
    if path == "-":
        return sys.stdin.buffer if binary else sys.stdin
    return open(path, "rb" if binary else "r",
                encoding=None if binary else "utf-8")


def _open_out(path: str):
    if path == "-":
        return sys.stdout
    return open(path, "w", encoding="utf-8")


def _iter_pages(args, stats: IngestStats):
    if args.input_format == "xml":
        src = _open_in(args.input, binary=True)
        try:
            yield from parse_xml_dump(src, args.cutoff, args.wiki, stats)
        finally:
            if src is not sys.stdin.buffer:
                src.close()
    else:
        src = _open_in(args.input)
        try:
            yield from parse_jsonl(src, args.cutoff, args.sorted_input,
                                   stats)
        finally:
            if src is not sys.stdin:
                src.close()


def _add_ingest_flags(sub):
    sub.add_argument("--input", default="-", help="file or - for stdin")
    sub.add_argument("--input-format", choices=("xml", "jsonl"),
                     default="xml")
    sub.add_argument("--cutoff", type=_cutoff, default=None,
                     help="drop revisions after this ISO-8601 instant")
    sub.add_argument("--sorted-input", action="store_true",
                     help="JSONL lines are already grouped per page")
    sub.add_argument("--wiki", default=None,
                     help="project code override (else from siteinfo)")


def cmd_ingest(args) -> int:
    stats = IngestStats()
    out = _open_out(args.out)
    try:
        write_revisions_jsonl(_iter_pages(args, stats), out)
    finally:
        if out is not sys.stdout:
            out.close()
    print(json.dumps(stats.as_dict()), file=sys.stderr)
    return EXIT_OK


def cmd_roster_build(args) -> int:
    roster = merge_sources(args.groups or (), args.former_groups or (),
                           args.categories or ())
    out = _open_out(args.out)
    try:
        write_roster_jsonl(roster, out)
    finally:
        if out is not sys.stdout:
            out.close()
    print(json.dumps({"accounts": len(roster),
                      "source_counts": dict(roster.source_counts),
                      "skipped_rows": roster.skipped_rows}),
          file=sys.stderr)
    return EXIT_OK


def cmd_detect(args) -> int:
    stats = IngestStats()
    roster = load_roster(args.roster) if args.roster else None
    if roster is None and not args.all_reverts:
        raise DataError("--roster is required unless --all-reverts")
    out = _open_out(args.out)
    n = 0
    try:
        for page in _iter_pages(args, stats):
            pairs = (closest_pair(e)
                     for e in detect_reverts(page, args.radius))
            if not args.all_reverts:
                pairs = filter_bot_bot(pairs, roster, args.include_self)
            n += write_reverts_jsonl(pairs, out)
    finally:
        if out is not sys.stdout:
            out.close()
    print(json.dumps({"reverts": n, **stats.as_dict()}), file=sys.stderr)
    return EXIT_OK


def _read_reverts(path: str):
    src = _open_in(path)
    try:
        yield from read_reverts_jsonl(src)
    finally:
        if src is not sys.stdin:
            src.close()


def cmd_metrics(args) -> int:
    reverts = [r for r in _read_reverts(args.input)
               if args.namespace is None or r.namespace == args.namespace]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "yearly_counts.csv", "w", encoding="utf-8",
              newline="") as fp:
        write_yearly_counts_csv(yearly_counts(reverts), fp)
    with open(out_dir / "ttr_summary.csv", "w", encoding="utf-8",
              newline="") as fp:
        write_ttr_summary_csv(ttr_summary(reverts, args.group_by),
                              args.group_by, fp)
    stats = pair_page_stats(reverts)
    with open(out_dir / "pair_histogram.csv", "w", encoding="utf-8",
              newline="") as fp:
        write_pair_histogram_csv(pair_histogram(stats), fp)
    if args.kde:
        curve = ttr_kde(reverts, args.bandwidth)
        with open(out_dir / "kde.csv", "w", encoding="utf-8",
                  newline="") as fp:
            write_kde_csv(curve, fp)
    if args.bot_edits:
        rows = revert_share_of_bot_edits(reverts,
                                         read_count_tsv(args.bot_edits))
        with open(out_dir / "revert_share.csv", "w", encoding="utf-8",
                  newline="") as fp:
            write_revert_share_csv(rows, fp)
    return EXIT_OK


def cmd_classify(args) -> int:
    rules = load_rules(args.rules) if args.rules else load_default_rules()
    classified = list(classify_all(_read_reverts(args.input), rules))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "classified.jsonl", "w", encoding="utf-8") as fp:
        write_reverts_jsonl(classified, fp)
    counts = label_counts(classified)
    totals: Counter[str] = Counter()
    for (wiki, _), n in counts.items():
        totals[wiki] += n
    proportions = {wiki: {label: counts.get((wiki, label), 0) / totals[wiki]
                          for label in LABELS}
                   for wiki in sorted(totals)}
    with open(out_dir / "proportions.csv", "w", encoding="utf-8",
              newline="") as fp:
        write_proportions_csv(proportions, fp)
    if args.sample_label:
        sample = sample_for_validation(classified, args.sample_label,
                                       args.seed)
        with open(out_dir / "sample.jsonl", "w", encoding="utf-8") as fp:
            write_reverts_jsonl(sample, fp)
    return EXIT_OK


def cmd_screen(args) -> int:
    config = ScreenConfig.from_days(args.ttr_days, args.min_pair)
    kept, table = screen(_read_reverts(args.input), config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "suspected.jsonl", "w", encoding="utf-8") as fp:
        write_reverts_jsonl(kept, fp)
    with open(out_dir / "table3.csv", "w", encoding="utf-8",
              newline="") as fp:
        write_screen_csv(table, fp)
    print(json.dumps({"screened": len(kept)}), file=sys.stderr)
    return EXIT_OK


def cmd_synth(args) -> int:
    spec_kwargs = {}
    for name in ("pages", "bots", "events_per_page", "rename_gap_days",
                 "span_days"):
        value = getattr(args, name)
        if value is not None:
            spec_kwargs[name] = value
    spec = scenario(args.kind, seed=args.seed, wiki=args.wiki,
                    **spec_kwargs)
    result = generate(spec)
    paths = result.write(args.out_dir)
    print(json.dumps({"pages": len(result.pages),
                      "revisions": sum(len(p.revisions)
                                       for p in result.pages),
                      "labeled": len(result.truth),
                      "bots": len(result.bot_names),
                      "files": {k: str(v) for k, v in paths.items()}}),
          file=sys.stderr)
    return EXIT_OK


def cmd_score(args) -> int:
    truth = load_truth(args.truth)
    reverts = list(_read_reverts(args.reverts))
    screened = list(_read_reverts(args.screened)) if args.screened else None
    result = score_stages(truth, reverts, screened)
    out = _open_out(args.out)
    try:
        json.dump(result.as_dict(), out, indent=2)
        out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_report(args) -> int:
    if args.render_only:
        render_report(args.out_dir)
        if args.plots:
            from .plots import render_plots
            render_plots(Path(args.out_dir))
        return EXIT_OK
    if args.input is None:
        raise DataError("--input is required (or use --render-only)")
    config = PipelineConfig(
        input_path=args.input,
        out_dir=args.out_dir,
        input_format=args.input_format,
        sorted_input=args.sorted_input,
        cutoff=args.cutoff,
        wiki=args.wiki,
        namespace=args.namespace,
        radius=args.radius,
        include_self=args.include_self,
        all_reverts=args.all_reverts,
        roster_path=args.roster,
        rules_path=args.rules,
        bot_edits_path=args.bot_edits,
        group_by=args.group_by,
        kde_bandwidth=args.bandwidth,
        ttr_days=args.ttr_days,
        min_pair_reverts=args.min_pair,
        seed=args.seed,
        plots=args.plots,
    )
    result = run_pipeline(config)
    print(json.dumps({"out_dir": str(result.out_dir),
                      "reverts": result.revert_count,
                      "screened": result.screened_count,
                      **result.stats.as_dict()}),
          file=sys.stderr)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="botreverts",
                     description="Bot-bot revert analysis over MediaWiki "
                                 "revision histories.")
    parser.add_argument("--version", action="version",
                        version=f"botreverts {__version__}")
    subs = parser.add_subparsers(dest="command", required=True,
                                 parser_class=_Parser)

    sub = subs.add_parser("ingest", help="normalize a dump to revision "
                                         "JSONL")
    _add_ingest_flags(sub)
    sub.add_argument("--out", default="-")
    sub.set_defaults(func=cmd_ingest)

    sub = subs.add_parser("roster", help="bot roster operations")
    roster_subs = sub.add_subparsers(dest="roster_command", required=True,
                                     parser_class=_Parser)
    build = roster_subs.add_parser("build", help="merge roster sources")
    build.add_argument("--groups", action="append", default=[],
                       help="current-group TSV (repeatable)")
    build.add_argument("--former-groups", action="append", default=[])
    build.add_argument("--categories", action="append", default=[])
    build.add_argument("--out", default="-")
    build.set_defaults(func=cmd_roster_build)

    sub = subs.add_parser("detect", help="detect directed bot-bot reverts")
    _add_ingest_flags(sub)
    sub.add_argument("--roster", default=None)
    sub.add_argument("--radius", type=int, default=DEFAULT_RADIUS)
    sub.add_argument("--all-reverts", action="store_true",
                     help="skip bot filtering (baseline studies)")
    sub.add_argument("--include-self", action="store_true")
    sub.add_argument("--out", default="-")
    sub.set_defaults(func=cmd_detect)

    sub = subs.add_parser("metrics", help="aggregate revert metrics to CSV")
    sub.add_argument("--input", default="-", help="revert JSONL")
    sub.add_argument("--out-dir", required=True)
    sub.add_argument("--group-by", type=_group_by,
                     default=("wiki",), help="e.g. wiki,year or wiki,class")
    sub.add_argument("--namespace", type=int, default=None)
    sub.add_argument("--kde", action="store_true")
    sub.add_argument("--bandwidth", type=float, default=None)
    sub.add_argument("--bot-edits", default=None,
                     help="wiki<TAB>total-bot-edits TSV; adds "
                          "revert_share.csv")
    sub.set_defaults(func=cmd_metrics)

    sub = subs.add_parser("classify", help="label reverts from edit "
                                           "summaries")
    sub.add_argument("--input", default="-", help="revert JSONL")
    sub.add_argument("--rules", default=None,
                     help="rule TSV (default: shipped rules)")
    sub.add_argument("--out-dir", required=True)
    sub.add_argument("--sample-label", default=None,
                     help="also emit a validation sample of this label")
    sub.add_argument("--seed", type=int, default=0)
    sub.set_defaults(func=cmd_classify)

    sub = subs.add_parser("screen", help="reciprocation + short-ttr screen")
    sub.add_argument("--input", default="-", help="classified JSONL")
    sub.add_argument("--ttr-days", type=float, default=180.0)
    sub.add_argument("--min-pair", type=int, default=2)
    sub.add_argument("--out-dir", required=True)
    sub.set_defaults(func=cmd_screen)

    sub = subs.add_parser("synth", help="generate a labeled synthetic "
                                        "corpus")
    sub.add_argument("--kind", required=True,
                     choices=("double_redirect", "interwiki",
                              "protection_template", "orphan_template",
                              "botfight_pair", "mixed"))
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--wiki", default="en")
    sub.add_argument("--pages", type=int, default=None)
    sub.add_argument("--bots", type=int, default=None)
    sub.add_argument("--events-per-page", type=int, default=None)
    sub.add_argument("--rename-gap-days", type=float, default=None)
    sub.add_argument("--span-days", type=float, default=None)
    sub.add_argument("--out-dir", required=True)
    sub.set_defaults(func=cmd_synth)

    sub = subs.add_parser("score", help="score pipeline output against "
                                        "synth truth")
    sub.add_argument("--truth", required=True)
    sub.add_argument("--reverts", required=True,
                     help="detected or classified revert JSONL")
    sub.add_argument("--screened", default=None)
    sub.add_argument("--out", default="-")
    sub.set_defaults(func=cmd_score)

    sub = subs.add_parser("report", help="run the whole pipeline and "
                                         "render the report bundle")
    _add_ingest_flags(sub)
    sub.set_defaults(input=None)
    sub.add_argument("--namespace", type=int, default=None)
    sub.add_argument("--roster", default=None)
    sub.add_argument("--rules", default=None)
    sub.add_argument("--bot-edits", default=None,
                     help="wiki<TAB>total-bot-edits TSV; adds "
                          "revert_share.csv")
    sub.add_argument("--radius", type=int, default=DEFAULT_RADIUS)
    sub.add_argument("--all-reverts", action="store_true")
    sub.add_argument("--include-self", action="store_true")
    sub.add_argument("--group-by", type=_group_by, default=("wiki", "year"))
    sub.add_argument("--bandwidth", type=float, default=None)
    sub.add_argument("--ttr-days", type=float, default=180.0)
    sub.add_argument("--min-pair", type=int, default=2)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out-dir", required=True)
    sub.add_argument("--plots", action="store_true")
    sub.add_argument("--render-only", action="store_true",
                     help="re-render REPORT.md from an existing bundle")
    sub.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BotRevertsError as exc:
        print(f"botreverts: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
