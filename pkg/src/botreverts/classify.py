"""Rule-based typing of bot-bot reverts from edit summaries.

Rules live in a TSV file, not code, so the narrow/classify/validate loop
can be re-run with adjusted patterns.  Matching is first-match-wins over
ascending priority; named botfight rules sit at the lowest priorities
because they pin both the comment and the bot pair, and the generic
"revert vocabulary" rules come last so they only catch what nothing more
specific explained.
"""

from __future__ import annotations

import importlib.resources
import math
import random
import re
from collections import Counter
from dataclasses import dataclass, fields
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping, Sequence

from .detect import DirectedBotRevert
from .errors import DataError

NOT_CLASSIFIED = "not_classified"

# Canonical label vocabulary, in reporting order.
LABELS = (
    "category_work",
    "fixing_double_redirect",
    "interwiki_cleanup_m1",
    "interwiki_cleanup_m2",
    "other_w_revert_in_comment",
    "protection_template_cleanup",
    "template_work",
    "other_classified",
    "identified_botfight",
    NOT_CLASSIFIED,
)

# Labels a rule may assign; NOT_CLASSIFIED is reserved for "no rule fired".
RULE_LABELS = frozenset(LABELS) - {NOT_CLASSIFIED}

VALIDATION_LARGE_CLASS = 10_000
VALIDATION_SMALL_CAP = 100


@dataclass(frozen=True)
class ClassRule:
    """One ordered rule: comment pattern plus optional constraints.

    `bot_pair_pattern` is searched against "reverting->reverted";
    `exclude_pattern` vetoes an otherwise matching comment.  All regexes
    are case-insensitive.
    """

    priority: int
    label: str
    comment_pattern: str
    bot_pair_pattern: str | None = None
    wikis: frozenset[str] | None = None
    exclude_pattern: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "_comment_re",
                           re.compile(self.comment_pattern, re.IGNORECASE))
        object.__setattr__(self, "_pair_re",
                           re.compile(self.bot_pair_pattern, re.IGNORECASE)
                           if self.bot_pair_pattern else None)
        object.__setattr__(self, "_exclude_re",
                           re.compile(self.exclude_pattern, re.IGNORECASE)
                           if self.exclude_pattern else None)

    def matches(self, revert: DirectedBotRevert) -> bool:
        comment = revert.comment or ""
        if not self._comment_re.search(comment):
            return False
        if self._exclude_re is not None and self._exclude_re.search(comment):
            return False
        if self.wikis is not None and revert.wiki not in self.wikis:
            return False
        if self._pair_re is not None:
            pair = f"{revert.reverting_bot or ''}->{revert.reverted_bot or ''}"
            if not self._pair_re.search(pair):
                return False
        return True


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[ClassRule, ...]   # ascending priority
    path: str | None = None

    def __len__(self) -> int:
        return len(self.rules)


@dataclass(slots=True)
class ClassifiedRevert(DirectedBotRevert):
    label: str = NOT_CLASSIFIED
    matched_rule: int | None = None


def _parse_rule_line(line: str, where: str) -> ClassRule:
    parts = line.split("\t")
    parts += [""] * (6 - len(parts))
    if len(parts) > 6:
        raise DataError(f"{where}: expected at most 6 tab-separated fields")
    prio_s, label, comment, pair, wikis_s, exclude = (p.strip()
                                                      for p in parts[:6])
    try:
        priority = int(prio_s)
    except ValueError:
        raise DataError(f"{where}: priority {prio_s!r} is not an integer")
    if label not in RULE_LABELS:
        raise DataError(f"{where}: unknown label {label!r}")
    if not comment:
        raise DataError(f"{where}: empty comment pattern")
    for pattern in (comment, pair, exclude):
        if pattern:
            try:
                re.compile(pattern, re.IGNORECASE)
            except re.error as exc:
                raise DataError(f"{where}: bad regex {pattern!r}: {exc}")
    wikis = frozenset(w.strip() for w in wikis_s.split(",") if w.strip()) \
        if wikis_s else None
    return ClassRule(priority, label, comment, pair or None, wikis,
                     exclude or None)


def load_rules(source: str | Path | IO[str]) -> RuleSet:
    """Parse a rule TSV; rejects bad regexes and duplicate priorities."""
    close_me = None
    path_label = None
    if isinstance(source, (str, Path)):
        path_label = str(source)
        close_me = open(source, "r", encoding="utf-8")
        lines: Iterable[str] = close_me
    else:
        path_label = getattr(source, "name", "<rules>")
        lines = source
    rules: list[ClassRule] = []
    seen: dict[int, int] = {}
    try:
        for lineno, line in enumerate(lines, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            rule = _parse_rule_line(line, f"{path_label}:{lineno}")
            if rule.priority in seen:
                raise DataError(
                    f"{path_label}:{lineno}: duplicate priority "
                    f"{rule.priority} (first at line {seen[rule.priority]})")
            seen[rule.priority] = lineno
            rules.append(rule)
    finally:
        if close_me is not None:
            close_me.close()
    rules.sort(key=lambda r: r.priority)
    return RuleSet(tuple(rules), path_label)


def default_rules_path() -> Path:
    resource = importlib.resources.files("botreverts") / "rules" / \
        "default_rules.tsv"
    return Path(str(resource))


def load_default_rules() -> RuleSet:
    return load_rules(default_rules_path())


def classify(revert: DirectedBotRevert, rules: RuleSet) -> ClassifiedRevert:
    """First matching rule assigns the label; no match -> not_classified."""
    label = NOT_CLASSIFIED
    matched: int | None = None
    for rule in rules.rules:
        if rule.matches(revert):
            label = rule.label
            matched = rule.priority
            break
    base = {f.name: getattr(revert, f.name)
            for f in fields(DirectedBotRevert)}
    return ClassifiedRevert(**base, label=label, matched_rule=matched)


def classify_all(reverts: Iterable[DirectedBotRevert],
                 rules: RuleSet) -> Iterator[ClassifiedRevert]:
    for revert in reverts:
        yield classify(revert, rules)


def label_counts(classified: Iterable[ClassifiedRevert],
                 ) -> Counter[tuple[str, str]]:
    return Counter((r.wiki, r.label) for r in classified)


def class_proportions(classified: Iterable[ClassifiedRevert],
                      ) -> dict[str, dict[str, float]]:
    """Per-wiki share of each label; every wiki column sums to 1."""
    counts = label_counts(classified)
    totals: Counter[str] = Counter()
    for (wiki, _), n in counts.items():
        totals[wiki] += n
    return {wiki: {label: counts.get((wiki, label), 0) / totals[wiki]
                   for label in LABELS}
            for wiki in sorted(totals)}


def validation_sample_size(class_size: int) -> int:
    """1% of a class above 10,000 cases, else up to 100 reverts."""
    if class_size > VALIDATION_LARGE_CLASS:
        return math.floor(class_size / 100)
    return min(VALIDATION_SMALL_CAP, class_size)


def sample_for_validation(classified: Sequence[ClassifiedRevert], label: str,
                          seed: int) -> list[ClassifiedRevert]:
    """Reproducible uniform sample of one class for manual spot checks."""
    if label not in LABELS:
        raise DataError(f"unknown label {label!r}")
    members = [r for r in classified if r.label == label]
    size = validation_sample_size(len(members))
    rng = random.Random(seed)
    picked = sorted(rng.sample(range(len(members)), size))
    return [members[i] for i in picked]


def write_proportions_csv(proportions: Mapping[str, Mapping[str, float]],
                          out: IO[str]) -> None:
    import csv
    writer = csv.writer(out)
    wikis = sorted(proportions)
    writer.writerow(["label"] + wikis)
    for label in LABELS:
        writer.writerow([label] + [f"{proportions[w][label]:.6f}"
                                   for w in wikis])
