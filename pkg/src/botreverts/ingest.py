"""Streaming readers for MediaWiki revision metadata.

Two encodings are supported: the MediaWiki export XML schema (the
"stub-meta-history" dump variant carries everything we need and no page
text) and a line-oriented JSON sidecar used as the pipeline's interchange
format.  Both yield one `PageHistory` at a time.  The XML path and the
pre-grouped JSONL path never hold more than a single page's revisions in
memory, so multi-gigabyte dumps stream in bounded space.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import DataError

JSONL_FIELDS = ("wiki", "page_id", "ns", "title", "rev_id", "timestamp",
                "actor", "comment", "sha1")


@dataclass(frozen=True, slots=True)
class RevisionMeta:
    """One revision's metadata; the atom everything downstream consumes.

    `checksum` is the content hash token as the dump carries it (base-36
    SHA1).  It is only ever compared for exact string equality, never
    decoded.  `checksum`, `actor` and `comment` are None when the dump
    suppressed them; a None checksum never compares equal to anything.
    """

    wiki: str
    page_id: int
    page_title: str
    namespace: int
    rev_id: int
    timestamp: datetime
    actor: str | None
    comment: str | None
    checksum: str | None

    def sort_key(self) -> tuple[datetime, int]:
        # rev_id breaks timestamp ties; it is monotone in MediaWiki practice.
        return (self.timestamp, self.rev_id)


@dataclass(slots=True)
class PageHistory:
    """All kept revisions of one page, ordered by (timestamp, rev_id)."""

    wiki: str
    page_id: int
    namespace: int
    title: str
    revisions: list[RevisionMeta]


@dataclass
class IngestStats:
    """Counters for non-fatal conditions met while reading input."""

    pages: int = 0
    revisions: int = 0
    skipped_revisions: int = 0      # missing/invalid rev id or timestamp
    skipped_lines: int = 0          # undecodable or schema-invalid JSONL lines
    dropped_after_cutoff: int = 0
    duplicate_revisions: int = 0    # identical duplicate records dropped

    def as_dict(self) -> dict[str, int]:
        return {
            "pages": self.pages,
            "revisions": self.revisions,
            "skipped_revisions": self.skipped_revisions,
            "skipped_lines": self.skipped_lines,
            "dropped_after_cutoff": self.dropped_after_cutoff,
            "duplicate_revisions": self.duplicate_revisions,
        }


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 Zulu timestamp to an aware UTC datetime."""
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _local(tag: str) -> str:
    """Tag name with any XML namespace prefix stripped."""
    return tag.rsplit("}", 1)[-1]


class _CountingReader:
    """Wraps a binary stream so parse errors can report a byte offset."""

    def __init__(self, raw: IO[bytes]):
        self.raw = raw
        self.offset = 0

    def read(self, size: int = -1) -> bytes:
        data = self.raw.read(size)
        self.offset += len(data)
        return data


def _wiki_from_dbname(dbname: str) -> str:
    # "enwiki" -> "en"; anything else is used verbatim.
    if dbname.endswith("wiki") and len(dbname) > 4:
        return dbname[:-4]
    return dbname


def _revision_from_elem(elem: ET.Element, wiki: str, page_id: int,
                        title: str, namespace: int) -> RevisionMeta | None:
    rev_id: int | None = None
    timestamp: datetime | None = None
    actor: str | None = None
    comment: str | None = None
    checksum: str | None = None
    for child in elem:
        tag = _local(child.tag)
        if tag == "id":
            try:
                rev_id = int(child.text or "")
            except ValueError:
                rev_id = None
        elif tag == "timestamp":
            try:
                timestamp = parse_timestamp(child.text or "")
            except ValueError:
                timestamp = None
        elif tag == "contributor":
            if "deleted" in child.attrib:
                actor = None
            else:
                for sub in child:
                    if _local(sub.tag) in ("username", "ip"):
                        actor = sub.text or ""
        elif tag == "comment":
            comment = None if "deleted" in child.attrib else (child.text or "")
        elif tag == "sha1":
            checksum = child.text or None
    if rev_id is None or rev_id <= 0 or timestamp is None:
        return None
    return RevisionMeta(wiki, page_id, title, namespace, rev_id, timestamp,
                        actor, comment, checksum)


def parse_xml_dump(source: IO[bytes] | str | Path,
                   cutoff: datetime | None = None,
                   wiki: str | None = None,
                   stats: IngestStats | None = None) -> Iterator[PageHistory]:
    """Stream `PageHistory` objects out of MediaWiki export XML.

    Only the elements needed for revert analysis are read: page title/ns/id
    and, per revision, id/timestamp/contributor/comment/sha1.  Revision
    subtrees are discarded as soon as they are converted, so peak memory is
    bounded by the largest single page, not the dump.

    The project code is taken from `wiki` if given, else derived from
    siteinfo's dbname.  Revisions after `cutoff` are dropped; pages with no
    kept revisions are not emitted.  Malformed XML raises `DataError` with
    the approximate byte offset; a revision missing its id or timestamp is
    skipped and counted in `stats`.
    """
    stats = stats if stats is not None else IngestStats()
    close_me: IO[bytes] | None = None
    if isinstance(source, (str, Path)):
        close_me = open(source, "rb")
        raw: IO[bytes] = close_me
    else:
        raw = source
    reader = _CountingReader(raw)
    derived_wiki = wiki
    root: ET.Element | None = None
    pending: list[RevisionMeta] = []
    try:
        events = ET.iterparse(reader, events=("start", "end"))
        for event, elem in events:
            if event == "start":
                if root is None:
                    root = elem
                continue
            tag = _local(elem.tag)
            if tag == "dbname":
                if derived_wiki is None:
                    derived_wiki = _wiki_from_dbname(elem.text or "")
            elif tag == "revision":
                # Page-level metadata is not known yet; patched in at
                # page end.  Placeholders are never visible outside.
                rev = _revision_from_elem(elem, "", 0, "", 0)
                if rev is None:
                    stats.skipped_revisions += 1
                elif cutoff is not None and rev.timestamp > cutoff:
                    stats.dropped_after_cutoff += 1
                else:
                    pending.append(rev)
                elem.clear()
            elif tag == "page":
                page_id = 0
                title = ""
                namespace = 0
                for child in elem:
                    ctag = _local(child.tag)
                    try:
                        if ctag == "id":
                            page_id = int(child.text or 0)
                        elif ctag == "title":
                            title = child.text or ""
                        elif ctag == "ns":
                            namespace = int(child.text or 0)
                    except ValueError as exc:
                        raise DataError(
                            f"page element with non-integer {ctag}: "
                            f"{child.text!r}") from exc
                wk = derived_wiki if derived_wiki is not None else "unknown"
                revs = [RevisionMeta(wk, page_id, title, namespace, r.rev_id,
                                     r.timestamp, r.actor, r.comment,
                                     r.checksum)
                        for r in pending]
                pending = []
                elem.clear()
                if root is not None:
                    root.clear()
                if revs:
                    revs.sort(key=RevisionMeta.sort_key)
                    stats.pages += 1
                    stats.revisions += len(revs)
                    yield PageHistory(wk, page_id, namespace, title, revs)
    except ET.ParseError as exc:
        raise DataError(
            f"malformed XML near byte offset {reader.offset} "
            f"(line {exc.position[0]}, column {exc.position[1]}): {exc}"
        ) from exc
    finally:
        if close_me is not None:
            close_me.close()


def _revision_from_record(rec: dict, cutoff: datetime | None,
                          stats: IngestStats) -> RevisionMeta | None | bool:
    """Returns a RevisionMeta, None for a bad record, False for cutoff-drop."""
    try:
        wiki = rec["wiki"]
        page_id = rec["page_id"]
        rev_id = rec["rev_id"]
        timestamp = parse_timestamp(rec["timestamp"])
        title = rec.get("title", "")
        namespace = rec.get("ns", 0)
        actor = rec.get("actor")
        comment = rec.get("comment")
        checksum = rec.get("sha1")
        if not isinstance(wiki, str) or not isinstance(title, str):
            return None
        # JSON true/false decode as bool, a subclass of int; reject them.
        for number in (page_id, rev_id, namespace):
            if not isinstance(number, int) or isinstance(number, bool):
                return None
        if page_id <= 0 or rev_id <= 0:
            return None
        for text_or_none in (actor, comment, checksum):
            if text_or_none is not None and not isinstance(text_or_none, str):
                return None
    except (KeyError, TypeError, ValueError):
        return None
    if cutoff is not None and timestamp > cutoff:
        stats.dropped_after_cutoff += 1
        return False
    return RevisionMeta(wiki, page_id, title, namespace, rev_id, timestamp,
                        actor, comment, checksum)


def _finalize_page(key: tuple[str, int], revs: list[RevisionMeta],
                   stats: IngestStats) -> PageHistory:
    seen: dict[int, RevisionMeta] = {}
    kept: list[RevisionMeta] = []
    for rev in revs:
        prior = seen.get(rev.rev_id)
        if prior is None:
            seen[rev.rev_id] = rev
            kept.append(rev)
        elif prior == rev:
            stats.duplicate_revisions += 1
        else:
            raise DataError(
                f"conflicting duplicate rev_id {rev.rev_id} on page "
                f"{key[0]}/{key[1]}")
    kept.sort(key=RevisionMeta.sort_key)
    stats.pages += 1
    stats.revisions += len(kept)
    first = kept[0]
    return PageHistory(first.wiki, first.page_id, first.namespace,
                       first.page_title, kept)


def parse_jsonl(source: Iterable[str] | IO[str] | str | Path,
                cutoff: datetime | None = None,
                sorted_input: bool = False,
                stats: IngestStats | None = None) -> Iterator[PageHistory]:
    """Stream `PageHistory` objects out of revision JSONL.

    One JSON object per line with the fields `wiki, page_id, ns, title,
    rev_id, timestamp, actor, comment, sha1` (null for an absent checksum,
    comment or actor).  With `sorted_input` the lines must already be
    grouped per page and the reader streams page-at-a-time; otherwise a
    regroup pass buffers the whole input and emits pages in first-seen
    order.  Undecodable lines are skipped and counted; a rev_id appearing
    twice with conflicting fields fails (exact duplicates are dropped and
    counted).  Duplicate checking spans the whole input in regroup mode and
    one page group in sorted mode.
    """
    stats = stats if stats is not None else IngestStats()
    close_me = None
    if isinstance(source, (str, Path)):
        close_me = open(source, "r", encoding="utf-8")
        lines: Iterable[str] = close_me
    else:
        lines = source
    try:
        if sorted_input:
            yield from _parse_sorted(lines, cutoff, stats)
        else:
            yield from _parse_regrouped(lines, cutoff, stats)
    finally:
        if close_me is not None:
            close_me.close()


def _decode_line(line: str, cutoff: datetime | None,
                 stats: IngestStats) -> RevisionMeta | None:
    line = line.strip()
    if not line:
        return None
    try:
        rec = json.loads(line)
    except json.JSONDecodeError:
        stats.skipped_lines += 1
        return None
    if not isinstance(rec, dict):
        stats.skipped_lines += 1
        return None
    rev = _revision_from_record(rec, cutoff, stats)
    if rev is None:
        stats.skipped_lines += 1
        return None
    if rev is False:
        return None
    return rev


def _parse_sorted(lines: Iterable[str], cutoff: datetime | None,
                  stats: IngestStats) -> Iterator[PageHistory]:
    done: set[tuple[str, int]] = set()
    key: tuple[str, int] | None = None
    bucket: list[RevisionMeta] = []
    for line in lines:
        rev = _decode_line(line, cutoff, stats)
        if rev is None:
            continue
        rev_key = (rev.wiki, rev.page_id)
        if rev_key != key:
            if key is not None and bucket:
                yield _finalize_page(key, bucket, stats)
                done.add(key)
            if rev_key in done:
                raise DataError(
                    f"page {rev_key[0]}/{rev_key[1]} is not contiguous; "
                    "re-run without --sorted-input")
            key = rev_key
            bucket = []
        bucket.append(rev)
    if key is not None and bucket:
        yield _finalize_page(key, bucket, stats)


def _parse_regrouped(lines: Iterable[str], cutoff: datetime | None,
                     stats: IngestStats) -> Iterator[PageHistory]:
    buckets: dict[tuple[str, int], list[RevisionMeta]] = {}
    seen: dict[tuple[str, int], RevisionMeta] = {}
    for line in lines:
        rev = _decode_line(line, cutoff, stats)
        if rev is None:
            continue
        id_key = (rev.wiki, rev.rev_id)
        prior = seen.get(id_key)
        if prior is not None:
            if prior == rev:
                stats.duplicate_revisions += 1
                continue
            raise DataError(
                f"conflicting duplicate rev_id {rev.rev_id} in wiki "
                f"{rev.wiki}")
        seen[id_key] = rev
        buckets.setdefault((rev.wiki, rev.page_id), []).append(rev)
    for key, bucket in buckets.items():
        yield _finalize_page(key, bucket, stats)


def revision_to_dict(rev: RevisionMeta) -> dict:
    return {
        "wiki": rev.wiki,
        "page_id": rev.page_id,
        "ns": rev.namespace,
        "title": rev.page_title,
        "rev_id": rev.rev_id,
        "timestamp": format_timestamp(rev.timestamp),
        "actor": rev.actor,
        "comment": rev.comment,
        "sha1": rev.checksum,
    }


def write_revisions_jsonl(pages: Iterable[PageHistory], out: IO[str]) -> int:
    """Write page histories as revision JSONL; inverse of `parse_jsonl`."""
    n = 0
    for page in pages:
        for rev in page.revisions:
            out.write(json.dumps(revision_to_dict(rev), ensure_ascii=False,
                                 separators=(",", ":")))
            out.write("\n")
            n += 1
    return n
