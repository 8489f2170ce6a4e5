"""Aggregate conflict signals over directed bot-bot reverts.

Three families of metrics: yearly revert counts per wiki, time-to-revert
summaries (mean/median/95% CI) and log-scale kernel density curves, and
per-page bot-pair reciprocation statistics.  All aggregations are
order-insensitive.
"""

from __future__ import annotations

import csv
import math
import statistics
from collections import Counter
from dataclasses import dataclass
from datetime import datetime
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .detect import DirectedBotRevert
from .errors import DataError

SECONDS_PER_DAY = 86_400.0
# One second, in days: shifts instant reverts off log10(0).
LOG_EPSILON_DAYS = 1.0 / 86_400.0
KDE_GRID_POINTS = 512
GROUP_FIELDS = {"wiki": lambda r: r.wiki,
                "year": lambda r: r.year,
                "label": lambda r: getattr(r, "label", "not_classified")}
GROUP_ALIASES = {"class": "label"}


@dataclass(frozen=True)
class TtrSummary:
    """Per-group time-to-revert summary, in days.

    The 95% confidence interval on the mean uses the normal approximation
    (mean +/- 1.96 * s / sqrt(n)); a single observation degenerates to a
    point interval.
    """

    group: tuple
    count: int
    mean_days: float
    median_days: float
    ci95_low: float
    ci95_high: float


@dataclass(frozen=True)
class KdeCurve:
    """Gaussian KDE of time to revert on a log10(days) axis."""

    grid: np.ndarray       # ascending, 512 points
    density: np.ndarray    # non-negative
    bandwidth: float

    def integral(self) -> float:
        trapezoid = getattr(np, "trapezoid", np.trapz)
        return float(trapezoid(self.density, self.grid))


@dataclass(frozen=True)
class PairPageStat:
    """One unordered bot pair's revert activity on one page."""

    wiki: str
    page_id: int
    bot_pair: tuple[str, str]   # sorted
    revert_count: int
    first_time: datetime
    last_time: datetime

    @property
    def duration_seconds(self) -> int:
        return int((self.last_time - self.first_time).total_seconds())


@dataclass(frozen=True)
class ReciprocationShares:
    """Shares of reverts (not groups) by pair-page interaction count."""

    once_share: float
    twice_share: float
    more_share: float


def yearly_counts(reverts: Iterable[DirectedBotRevert],
                  namespace_filter: int | None = None,
                  ) -> list[tuple[str, int, int]]:
    """Count reverts per (wiki, year of the reverting edit)."""
    counter: Counter[tuple[str, int]] = Counter()
    for revert in reverts:
        if namespace_filter is not None and \
                revert.namespace != namespace_filter:
            continue
        counter[(revert.wiki, revert.year)] += 1
    return [(wiki, year, count)
            for (wiki, year), count in sorted(counter.items())]


def resolve_group_by(tokens: Sequence[str]) -> tuple[str, ...]:
    resolved = []
    for token in tokens:
        token = GROUP_ALIASES.get(token, token)
        if token not in GROUP_FIELDS:
            raise DataError(f"unknown group-by field {token!r}; expected "
                            f"wiki, year or class")
        resolved.append(token)
    return tuple(resolved)


def group_key_for(revert: DirectedBotRevert,
                  group_by: Sequence[str]) -> tuple:
    return tuple(GROUP_FIELDS[name](revert) for name in group_by)


def summarize_duration_groups(groups: Mapping[tuple, Sequence[float]],
                              ) -> list[TtrSummary]:
    """Summaries from pre-grouped duration columns (days)."""
    out = []
    for key in sorted(groups):
        days = groups[key]
        mean = statistics.fmean(days)
        if len(days) > 1:
            half = 1.96 * statistics.stdev(days) / math.sqrt(len(days))
        else:
            half = 0.0
        out.append(TtrSummary(key, len(days), mean, statistics.median(days),
                              mean - half, mean + half))
    return out


def ttr_summary(reverts: Iterable[DirectedBotRevert],
                group_by: Sequence[str] = ("wiki",),
                ) -> list[TtrSummary]:
    """Per-group count/mean/median/CI of time to revert, in days."""
    group_by = resolve_group_by(group_by)
    groups: dict[tuple, list[float]] = {}
    for revert in reverts:
        key = group_key_for(revert, group_by)
        groups.setdefault(key, []).append(
            revert.time_to_revert / SECONDS_PER_DAY)
    return summarize_duration_groups(groups)


def silverman_bandwidth(values: np.ndarray) -> float:
    """0.9 * min(sd, IQR/1.34) * n^(-1/5); falls back to sd for zero IQR."""
    sd = float(values.std(ddof=1))
    q75, q25 = np.percentile(values, [75, 25])
    iqr = float(q75 - q25)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * spread * len(values) ** (-1 / 5)


def kde_curve(days: Sequence[float],
              bandwidth: float | None = None) -> KdeCurve:
    """Gaussian KDE of durations (days) on a log10(days + 1s) axis.

    The grid is 512 evenly spaced points spanning the transformed data
    plus three bandwidths each side, so the curve integrates to ~1.
    """
    values = np.log10(np.asarray(list(days), dtype=float) + LOG_EPSILON_DAYS)
    if len(np.unique(values)) < 2:
        raise DataError("KDE needs at least 2 distinct durations; "
                        "use a histogram for this data")
    if bandwidth is None:
        bandwidth = silverman_bandwidth(values)
    if bandwidth <= 0:
        raise DataError(f"bandwidth must be positive, got {bandwidth}")
    grid = np.linspace(values.min() - 3 * bandwidth,
                       values.max() + 3 * bandwidth, KDE_GRID_POINTS)
    z = (grid[:, None] - values[None, :]) / bandwidth
    density = np.exp(-0.5 * z * z).sum(axis=1)
    density /= len(values) * bandwidth * math.sqrt(2 * math.pi)
    return KdeCurve(grid, density, bandwidth)


def ttr_kde(reverts: Iterable[DirectedBotRevert],
            bandwidth: float | None = None) -> KdeCurve:
    return kde_curve([r.time_to_revert / SECONDS_PER_DAY for r in reverts],
                     bandwidth)


def local_maxima(curve: KdeCurve) -> list[float]:
    """Grid positions where the density is a strict local maximum."""
    d = curve.density
    idx = [i for i in range(1, len(d) - 1) if d[i - 1] < d[i] > d[i + 1]]
    return [float(curve.grid[i]) for i in idx]


def pair_key(revert: DirectedBotRevert) -> tuple[str, int, tuple[str, str]]:
    a, b = revert.reverting_bot or "", revert.reverted_bot or ""
    pair = (a, b) if a <= b else (b, a)
    return (revert.wiki, revert.page_id, pair)


def pair_page_stats(reverts: Iterable[DirectedBotRevert],
                    ) -> list[PairPageStat]:
    """Group reverts by (wiki, page, unordered bot pair)."""
    acc: dict[tuple, list] = {}
    for revert in reverts:
        key = pair_key(revert)
        entry = acc.get(key)
        t = revert.reverting_time
        if entry is None:
            acc[key] = [1, t, t]
        else:
            entry[0] += 1
            entry[1] = min(entry[1], t)
            entry[2] = max(entry[2], t)
    return [PairPageStat(wiki, page_id, pair, count, first, last)
            for (wiki, page_id, pair), (count, first, last)
            in sorted(acc.items())]


def pair_histogram(stats: Iterable[PairPageStat]) -> Counter[int]:
    """reverts-per-pair-page count -> number of pair-page groups."""
    return Counter(s.revert_count for s in stats)


def reciprocation_shares(histogram: Mapping[int, int]) -> ReciprocationShares:
    """Share of reverts in groups of exactly 1, exactly 2, and >2.

    Weighted by reverts, not groups: a group of k contributes k reverts.
    """
    if not histogram:
        raise DataError("empty histogram")
    total = sum(k * n for k, n in histogram.items())
    once = histogram.get(1, 0) / total
    twice = 2 * histogram.get(2, 0) / total
    more = sum(k * n for k, n in histogram.items() if k > 2) / total
    return ReciprocationShares(once, twice, more)


def read_count_tsv(path) -> dict[str, int]:
    """`wiki<TAB>count` rows, `#` comments; e.g. total bot edits per wiki."""
    counts: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            try:
                counts[parts[0].strip()] = int(parts[1])
            except (IndexError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: expected "
                                f"wiki<TAB>count ({exc})") from exc
    return counts


def revert_share_of_bot_edits(reverts: Iterable[DirectedBotRevert],
                              bot_edit_counts: Mapping[str, int],
                              ) -> list[tuple[str, int, int, float]]:
    """Per-wiki (reverts, total bot edits, reverts / total bot edits)."""
    revert_counts: Counter[str] = Counter(r.wiki for r in reverts)
    rows = []
    for wiki in sorted(set(revert_counts) | set(bot_edit_counts)):
        n_reverts = revert_counts.get(wiki, 0)
        n_edits = bot_edit_counts.get(wiki, 0)
        share = n_reverts / n_edits if n_edits else 0.0
        rows.append((wiki, n_reverts, n_edits, share))
    return rows


def write_revert_share_csv(rows: Iterable[tuple[str, int, int, float]],
                           out: IO[str]) -> None:
    writer = csv.writer(out)
    writer.writerow(["wiki", "bot_bot_reverts", "bot_edits", "share"])
    for wiki, n_reverts, n_edits, share in rows:
        writer.writerow([wiki, n_reverts, n_edits, f"{share:.6f}"])


def write_yearly_counts_csv(rows: Iterable[tuple[str, int, int]],
                            out: IO[str]) -> None:
    writer = csv.writer(out)
    writer.writerow(["wiki", "year", "reverts"])
    for wiki, year, count in rows:
        writer.writerow([wiki, year, count])


def write_ttr_summary_csv(summaries: Iterable[TtrSummary],
                          group_by: Sequence[str], out: IO[str]) -> None:
    writer = csv.writer(out)
    writer.writerow(list(group_by) + ["count", "mean_days", "median_days",
                                      "ci95_low_days", "ci95_high_days"])
    for s in summaries:
        writer.writerow(list(s.group) + [
            s.count, f"{s.mean_days:.6f}", f"{s.median_days:.6f}",
            f"{s.ci95_low:.6f}", f"{s.ci95_high:.6f}"])


def write_pair_histogram_csv(histogram: Mapping[int, int],
                             out: IO[str]) -> None:
    writer = csv.writer(out)
    writer.writerow(["reverts_per_pair_page", "pair_page_groups"])
    for count in sorted(histogram):
        writer.writerow([count, histogram[count]])


def write_kde_csv(curve: KdeCurve | None, out: IO[str]) -> None:
    writer = csv.writer(out)
    writer.writerow(["log10_days", "density"])
    if curve is None:
        return
    for x, y in zip(curve.grid, curve.density):
        writer.writerow([f"{x:.10g}", f"{y:.10g}"])
