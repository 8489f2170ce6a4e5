"""Identity-revert detection over single-page histories.

A revision R is an identity revert when some prior revision O within the
last `radius` revisions carries the same present checksum: R restored the
page to exactly the state it had at O.  The nearest such O is the
reverted-to revision, everything strictly between O and R was reverted,
and an edit identical to its immediate predecessor is a null edit, not a
revert (nothing was undone).  Each event is then projected onto a single
directed pair: the reverting revision against the latest reverted one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from typing import IO, Iterable, Iterator

from .errors import DataError
from .ingest import (PageHistory, RevisionMeta, format_timestamp,
                     parse_timestamp)
from .roster import BotRoster, is_bot, normalize_username

DEFAULT_RADIUS = 15

REVERT_FIELDS = ("wiki", "page_id", "namespace", "reverting_bot",
                 "reverted_bot", "reverting_rev_id", "reverted_rev_id",
                 "reverting_time", "reverted_time", "comment",
                 "time_to_revert", "year")


@dataclass(slots=True)
class RevertEvent:
    """One identity revert: reverting restored the state of reverted_to."""

    wiki: str
    page_id: int
    namespace: int
    reverting: RevisionMeta
    reverted: list[RevisionMeta]   # page order; never empty
    reverted_to: RevisionMeta


@dataclass(slots=True)
class DirectedBotRevert:
    """The closest-pair projection of a revert event.

    `reverted_*` fields describe the latest reverted revision only.  The
    actor fields hold whatever actor made the edit until `filter_bot_bot`
    restricts the stream to roster members.
    """

    wiki: str
    page_id: int
    namespace: int
    reverting_bot: str | None
    reverted_bot: str | None
    reverting_rev_id: int
    reverted_rev_id: int
    reverting_time: datetime
    reverted_time: datetime
    comment: str | None
    time_to_revert: int           # seconds, >= 0
    year: int


def detect_reverts(page: PageHistory,
                   radius: int = DEFAULT_RADIUS) -> list[RevertEvent]:
    """Find identity reverts in one ordered page history.

    Absent checksums never match, so suppressed revisions can be reverted
    over but never act as the reverting or reverted-to side.  Events come
    back in page order.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    revs = page.revisions
    events: list[RevertEvent] = []
    for i, rev in enumerate(revs):
        checksum = rev.checksum
        if checksum is None:
            continue
        nearest = -1
        for j in range(i - 1, max(0, i - radius) - 1, -1):
            if revs[j].checksum is not None and revs[j].checksum == checksum:
                nearest = j
                break
        if nearest < 0 or nearest == i - 1:
            continue
        reverted = [r for r in revs[nearest + 1:i] if r.checksum != checksum]
        events.append(RevertEvent(page.wiki, page.page_id, page.namespace,
                                  rev, reverted, revs[nearest]))
    return events


def closest_pair(event: RevertEvent) -> DirectedBotRevert:
    """Reduce an event to the reverting revision vs the latest reverted one."""
    reverting = event.reverting
    closest = event.reverted[-1]
    delta = reverting.timestamp - closest.timestamp
    return DirectedBotRevert(
        wiki=event.wiki,
        page_id=event.page_id,
        namespace=event.namespace,
        reverting_bot=reverting.actor,
        reverted_bot=closest.actor,
        reverting_rev_id=reverting.rev_id,
        reverted_rev_id=closest.rev_id,
        reverting_time=reverting.timestamp,
        reverted_time=closest.timestamp,
        comment=reverting.comment,
        time_to_revert=int(delta.total_seconds()),
        year=reverting.timestamp.year,
    )


def filter_bot_bot(pairs: Iterable[DirectedBotRevert], roster: BotRoster,
                   include_self: bool = False) -> Iterator[DirectedBotRevert]:
    """Keep pairs where both actors are roster bots.

    Self-reverts (same normalized username on both sides) are dropped
    unless `include_self`: a bot undoing itself is not inter-bot activity.
    """
    for pair in pairs:
        if not is_bot(roster, pair.wiki, pair.reverting_bot):
            continue
        if not is_bot(roster, pair.wiki, pair.reverted_bot):
            continue
        if not include_self and normalize_username(pair.reverting_bot) == \
                normalize_username(pair.reverted_bot):
            continue
        yield pair


def revert_to_dict(revert: DirectedBotRevert) -> dict:
    rec = {
        "wiki": revert.wiki,
        "page_id": revert.page_id,
        "namespace": revert.namespace,
        "reverting_bot": revert.reverting_bot,
        "reverted_bot": revert.reverted_bot,
        "reverting_rev_id": revert.reverting_rev_id,
        "reverted_rev_id": revert.reverted_rev_id,
        "reverting_time": format_timestamp(revert.reverting_time),
        "reverted_time": format_timestamp(revert.reverted_time),
        "comment": revert.comment,
        "time_to_revert": revert.time_to_revert,
        "year": revert.year,
    }
    label = getattr(revert, "label", None)
    if label is not None:
        rec["label"] = label
        rec["matched_rule"] = getattr(revert, "matched_rule", None)
    return rec


def revert_from_dict(rec: dict) -> DirectedBotRevert:
    # Imported lazily to avoid a module cycle with classify.
    try:
        kwargs = dict(
            wiki=rec["wiki"],
            page_id=rec["page_id"],
            namespace=rec["namespace"],
            reverting_bot=rec["reverting_bot"],
            reverted_bot=rec["reverted_bot"],
            reverting_rev_id=rec["reverting_rev_id"],
            reverted_rev_id=rec["reverted_rev_id"],
            reverting_time=parse_timestamp(rec["reverting_time"]),
            reverted_time=parse_timestamp(rec["reverted_time"]),
            comment=rec["comment"],
            time_to_revert=rec["time_to_revert"],
            year=rec["year"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"bad revert record: {exc}") from exc
    if "label" in rec:
        from .classify import ClassifiedRevert
        return ClassifiedRevert(**kwargs, label=rec["label"],
                                matched_rule=rec.get("matched_rule"))
    return DirectedBotRevert(**kwargs)


def write_reverts_jsonl(reverts: Iterable[DirectedBotRevert],
                        out: IO[str]) -> int:
    n = 0
    for revert in reverts:
        out.write(json.dumps(revert_to_dict(revert), ensure_ascii=False,
                             separators=(",", ":")))
        out.write("\n")
        n += 1
    return n


def read_reverts_jsonl(source: Iterable[str] | IO[str],
                       ) -> Iterator[DirectedBotRevert]:
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"revert JSONL line {lineno}: {exc}") from exc
        yield revert_from_dict(rec)
