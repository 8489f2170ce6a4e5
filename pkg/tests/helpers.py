"""Shared test helpers: fixture histories and an export-XML writer."""

from __future__ import annotations

import hashlib
from datetime import datetime, timedelta, timezone
from xml.sax.saxutils import escape

from botreverts.ingest import PageHistory, RevisionMeta

UTC = timezone.utc
BASE_TIME = datetime(2013, 1, 1, tzinfo=UTC)

# The double-redirect page whose three revisions exercise the whole
# pipeline: a human creates the redirect, one bot re-points it after a
# rename, a second bot points it back after the rename is undone.
REDIRECT_V1 = "#REDIRECT [[Japan–United States relations]]"
REDIRECT_V2 = "#REDIRECT [[Japan – United States relations]]"


def base36_sha1(text: str) -> str:
    digits = "0123456789abcdefghijklmnopqrstuvwxyz"
    n = int(hashlib.sha1(text.encode()).hexdigest(), 16)
    out = []
    while n:
        n, rem = divmod(n, 36)
        out.append(digits[rem])
    return "".join(reversed(out))


def redirect_fixture_page() -> PageHistory:
    wiki = "en"
    page_id = 18717338
    title = "Japan-United States relations"
    revs = [
        RevisionMeta(wiki, page_id, title, 0, 224031785,
                     datetime(2008, 7, 6, tzinfo=UTC), "The Transhumanist",
                     "moved [[Japan-United States relations]] to "
                     "[[Japan–United States relations]]",
                     base36_sha1(REDIRECT_V1)),
        RevisionMeta(wiki, page_id, title, 0, 270913021,
                     datetime(2009, 2, 15, tzinfo=UTC), "Xqbot",
                     "Bot: Fixing double redirect to "
                     "[[Japan – United States relations]]",
                     base36_sha1(REDIRECT_V2)),
        RevisionMeta(wiki, page_id, title, 0, 325980337,
                     datetime(2009, 11, 15, tzinfo=UTC), "DarknessBot",
                     "Fixing double redirect to "
                     "[[Japan–United States relations]]",
                     base36_sha1(REDIRECT_V1)),
    ]
    return PageHistory(wiki, page_id, 0, title, revs)


def make_history(checksums, wiki="en", page_id=77, start=BASE_TIME,
                 actors=None, step_seconds=3600, rev_base=100) -> PageHistory:
    """A page whose i-th revision carries checksums[i] (None allowed)."""
    revs = []
    for i, checksum in enumerate(checksums):
        actor = actors[i] if actors else f"User {i % 3}"
        revs.append(RevisionMeta(
            wiki, page_id, f"Page {page_id}", 0, rev_base + i,
            start + timedelta(seconds=i * step_seconds), actor, "",
            checksum))
    return PageHistory(wiki, page_id, 0, f"Page {page_id}", revs)


def pages_to_export_xml(pages, dbname="enwiki",
                        namespaced=True) -> bytes:
    """Render page histories as MediaWiki export XML (stub style)."""
    ns_attr = ' xmlns="http://www.mediawiki.org/xml/export-0.10/"' \
        if namespaced else ""
    parts = [f"<mediawiki{ns_attr}>",
             f"<siteinfo><dbname>{dbname}</dbname></siteinfo>"]
    for page in pages:
        parts.append(f"<page><title>{escape(page.title)}</title>"
                     f"<ns>{page.namespace}</ns><id>{page.page_id}</id>")
        for rev in page.revisions:
            ts = rev.timestamp.strftime("%Y-%m-%dT%H:%M:%SZ")
            parts.append(f"<revision><id>{rev.rev_id}</id>"
                         f"<timestamp>{ts}</timestamp>")
            if rev.actor is None:
                parts.append('<contributor deleted="deleted" />')
            elif "." in rev.actor or ":" in rev.actor:
                parts.append(f"<contributor><ip>{escape(rev.actor)}</ip>"
                             f"</contributor>")
            else:
                parts.append(f"<contributor><username>{escape(rev.actor)}"
                             f"</username></contributor>")
            if rev.comment is None:
                parts.append('<comment deleted="deleted" />')
            elif rev.comment:
                parts.append(f"<comment>{escape(rev.comment)}</comment>")
            if rev.checksum:
                parts.append(f"<sha1>{rev.checksum}</sha1>")
            parts.append('<text bytes="0" /></revision>')
        parts.append("</page>")
    parts.append("</mediawiki>")
    return "".join(parts).encode("utf-8")


def oracle_detect(checksums, radius):
    """Brute-force reference: scan all (earlier, later) index pairs.

    Returns (reverting_index, reverted_indices, reverted_to_index) tuples
    under the nearest-match rule with null edits excluded.
    """
    events = []
    for i in range(len(checksums)):
        if checksums[i] is None:
            continue
        matches = [j for j in range(max(0, i - radius), i)
                   if checksums[j] is not None
                   and checksums[j] == checksums[i]]
        if not matches:
            continue
        origin = max(matches)
        if origin == i - 1:
            continue
        reverted = tuple(k for k in range(origin + 1, i)
                         if checksums[k] != checksums[i])
        events.append((i, reverted, origin))
    return events


def events_as_indices(page: PageHistory, events):
    """Map detector output back to revision indices for oracle comparison."""
    index_of = {rev.rev_id: i for i, rev in enumerate(page.revisions)}
    return [(index_of[e.reverting.rev_id],
             tuple(index_of[r.rev_id] for r in e.reverted),
             index_of[e.reverted_to.rev_id]) for e in events]
