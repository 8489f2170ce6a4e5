"""Documented targets for full-dump runs; skipped at desk scale.

These figures come from runs over the seven-wiki April 2017
stub-meta-history dumps truncated to 2016-12-31 and are far beyond what
fits in a test sandbox.  Point BOTREVERTS_FULLDUMP_BUNDLE at a report
bundle produced from those dumps (articles only, default radius and
rules) to check them:

    botreverts report --input enwiki-....xml --namespace 0 \
        --cutoff 2016-12-31T23:59:59Z --roster roster.jsonl --out-dir out/

Counts are exact for the detection stage; share targets that depend on
the shipped rule reconstruction get a wider tolerance because the rule
table is a reconstruction, not the original pattern set.
"""

from __future__ import annotations

import csv
import os
from pathlib import Path

import pytest

BUNDLE = os.environ.get("BOTREVERTS_FULLDUMP_BUNDLE")

pytestmark = pytest.mark.skipif(
    not BUNDLE, reason="set BOTREVERTS_FULLDUMP_BUNDLE to a full-dump "
                       "report bundle to run documented targets")

YEARLY_TARGETS = {("en", 2010): 13_512, ("en", 2013): 99_694,
                  ("en", 2016): 13_245, ("zh", 2013): 19_089,
                  ("zh", 2015): 675, ("zh", 2016): 196}
EN_RECIPROCATION = (0.932, 0.053, 0.0146)
EN_PROPORTION_TARGETS = {"fixing_double_redirect": 0.4515,
                         "not_classified": 0.0107}
SCREEN_NOT_CLASSIFIED_TOTAL = 962
RULE_SHARE_TOLERANCE = 0.02
RECIPROCATION_TOLERANCE = 0.002


def read_csv(name):
    with open(Path(BUNDLE) / name, newline="", encoding="utf-8") as fp:
        rows = list(csv.reader(fp))
    return rows[0], rows[1:]


def test_yearly_counts_match_documented_values():
    _, rows = read_csv("yearly_counts.csv")
    counts = {(w, int(y)): int(n) for w, y, n in rows}
    for key, expected in YEARLY_TARGETS.items():
        assert counts.get(key) == expected, key


def test_en_reciprocation_shares():
    _, rows = read_csv("pair_histogram.csv")
    hist = {int(k): int(n) for k, n in rows}
    total = sum(k * n for k, n in hist.items())
    once = hist.get(1, 0) / total
    twice = 2 * hist.get(2, 0) / total
    more = sum(k * n for k, n in hist.items() if k > 2) / total
    for got, expected in zip((once, twice, more), EN_RECIPROCATION):
        assert abs(got - expected) < RECIPROCATION_TOLERANCE


def test_en_label_proportions():
    header, rows = read_csv("proportions.csv")
    en = header.index("en")
    shares = {row[0]: float(row[en]) for row in rows}
    for label, expected in EN_PROPORTION_TARGETS.items():
        assert abs(shares[label] - expected) < RULE_SHARE_TOLERANCE, label


def test_screened_not_classified_total():
    header, rows = read_csv("table3.csv")
    total_col = header.index("total")
    by_label = {row[0]: int(row[total_col]) for row in rows}
    assert abs(by_label["not_classified"] - SCREEN_NOT_CLASSIFIED_TOTAL) \
        <= SCREEN_NOT_CLASSIFIED_TOTAL * 0.05
    flagged = by_label["not_classified"] + by_label["identified_botfight"] \
        + by_label["other_w_revert_in_comment"]
    assert abs(flagged - 3_007) <= 3_007 * 0.05


def test_overall_median_ttr_62_days():
    header, rows = read_csv("ttr_summary.csv")
    median_col = header.index("median_days")
    medians = [float(r[median_col]) for r in rows]
    assert medians, "expected at least one summary group"
    # All-wiki pooled median; run with --group-by wiki and weigh offline,
    # or supply a single-group summary. Single-group case checked here.
    if len(medians) == 1:
        assert abs(medians[0] - 62.0) < 2.0
