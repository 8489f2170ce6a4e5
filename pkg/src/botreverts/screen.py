"""Suspected-fight screen: reciprocated pair plus short time to revert.

A revert survives the screen when its (wiki, page, unordered bot pair)
group holds at least `min_pair_reverts` reverts and its own time to revert
is under the threshold.  Long-delayed reverts usually track changed
consensus rather than opposed code, so they are screened out even when
reciprocated.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .classify import ClassifiedRevert
from .metrics import SECONDS_PER_DAY, pair_key

DEFAULT_TTR_DAYS = 180.0
DEFAULT_MIN_PAIR_REVERTS = 2


@dataclass(frozen=True)
class ScreenConfig:
    ttr_threshold_seconds: float = DEFAULT_TTR_DAYS * SECONDS_PER_DAY
    min_pair_reverts: int = DEFAULT_MIN_PAIR_REVERTS

    def __post_init__(self):
        if self.ttr_threshold_seconds <= 0:
            raise ValueError("ttr threshold must be positive")
        if self.min_pair_reverts < 2:
            raise ValueError("min_pair_reverts must be >= 2")

    @classmethod
    def from_days(cls, ttr_days: float = DEFAULT_TTR_DAYS,
                  min_pair_reverts: int = DEFAULT_MIN_PAIR_REVERTS,
                  ) -> "ScreenConfig":
        return cls(ttr_days * SECONDS_PER_DAY, min_pair_reverts)


def screen(classified: Iterable[ClassifiedRevert],
           config: ScreenConfig | None = None,
           ) -> tuple[list[ClassifiedRevert], Counter[tuple[str, str]]]:
    """Return (kept reverts, per-(wiki, label) count table).

    Group sizes are tallied over the full input before filtering, so a
    pair's early reverts count toward reciprocation even when only later
    ones pass the time threshold.
    """
    config = config or ScreenConfig()
    reverts = list(classified)
    group_sizes: Counter = Counter(pair_key(r) for r in reverts)
    kept = [r for r in reverts
            if r.time_to_revert < config.ttr_threshold_seconds
            and group_sizes[pair_key(r)] >= config.min_pair_reverts]
    table: Counter[tuple[str, str]] = Counter(
        (r.wiki, getattr(r, "label", "not_classified")) for r in kept)
    return kept, table


def write_screen_csv(table: Counter, out) -> None:
    import csv

    from .classify import LABELS
    writer = csv.writer(out)
    wikis = sorted({wiki for wiki, _ in table})
    writer.writerow(["label"] + wikis + ["total"])
    for label in LABELS:
        row = [table.get((wiki, label), 0) for wiki in wikis]
        writer.writerow([label] + row + [sum(row)])
