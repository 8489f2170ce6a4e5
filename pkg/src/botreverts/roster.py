"""Bot account roster: merge flag, former-flag and category sources.

Membership is exact match on (wiki, username) after NFC normalization and
MediaWiki-style first-letter capitalization.  The "name contains bot"
heuristic is exposed for baseline comparisons only and is never merged
into a roster by default.
"""

from __future__ import annotations

import ipaddress
import json
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import DataError

SOURCE_CURRENT_GROUP = "current_group"
SOURCE_FORMER_GROUP = "former_group"
SOURCE_CATEGORY = "category"
SOURCE_NAME_HEURISTIC = "name_heuristic"
KNOWN_SOURCES = frozenset({SOURCE_CURRENT_GROUP, SOURCE_FORMER_GROUP,
                           SOURCE_CATEGORY, SOURCE_NAME_HEURISTIC})


def normalize_username(name: str) -> str:
    """NFC-normalize and capitalize the first code point."""
    name = unicodedata.normalize("NFC", name)
    if not name:
        return name
    return name[0].upper() + name[1:]


def name_heuristic(username: str) -> bool:
    """True iff the case-folded username contains the substring "bot"."""
    return "bot" in username.casefold()


def is_ip_actor(actor: str) -> bool:
    try:
        ipaddress.ip_address(actor)
    except ValueError:
        return False
    return True


@dataclass
class BotAccount:
    wiki: str
    username: str            # case-preserved as first seen
    sources: set[str]


@dataclass
class BotRoster:
    """Immutable-after-build set of bot identities with provenance.

    `source_counts` tallies rows per source before deduplication, so the
    total can exceed the account count when sources overlap.
    """

    accounts: dict[tuple[str, str], BotAccount] = field(default_factory=dict)
    source_counts: Counter = field(default_factory=Counter)
    skipped_rows: int = 0

    def add(self, wiki: str, username: str, source: str) -> None:
        if not username.strip():
            self.skipped_rows += 1
            return
        if source not in KNOWN_SOURCES:
            raise DataError(f"unknown roster source {source!r}")
        self.source_counts[source] += 1
        key = (wiki, normalize_username(username))
        account = self.accounts.get(key)
        if account is None:
            self.accounts[key] = BotAccount(wiki, username, {source})
        else:
            account.sources.add(source)

    def __len__(self) -> int:
        return len(self.accounts)

    def __contains__(self, key: tuple[str, str]) -> bool:
        wiki, username = key
        return (wiki, normalize_username(username)) in self.accounts


def is_bot(roster: BotRoster, wiki: str, username: str | None) -> bool:
    """Exact normalized membership test; IP and absent actors are never bots."""
    if username is None or not username or is_ip_actor(username):
        return False
    return (wiki, username) in roster


def read_roster_tsv(source: Iterable[str] | str | Path,
                    default_source: str = SOURCE_CURRENT_GROUP,
                    ) -> Iterator[tuple[str, str, str]]:
    """Yield (wiki, username, source) from TSV rows.

    Rows are `wiki<TAB>username[<TAB>source]`; `#` lines and blanks are
    ignored.  A row without a source column gets `default_source`.
    """
    close_me = None
    if isinstance(source, (str, Path)):
        close_me = open(source, "r", encoding="utf-8")
        lines: Iterable[str] = close_me
    else:
        lines = source
    try:
        for lineno, line in enumerate(lines, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise DataError(f"roster TSV line {lineno}: expected "
                                f"wiki<TAB>username, got {line!r}")
            wiki = parts[0].strip()
            # Padding is file formatting; MediaWiki usernames never carry
            # leading or trailing whitespace.
            username = parts[1].strip()
            src = parts[2].strip() if len(parts) > 2 and parts[2].strip() \
                else default_source
            yield wiki, username, src
    finally:
        if close_me is not None:
            close_me.close()


def merge_sources(group_lists: Iterable[str | Path] = (),
                  former_group_lists: Iterable[str | Path] = (),
                  category_member_lists: Iterable[str | Path] = (),
                  ) -> BotRoster:
    """Union the three account sources into one roster with provenance.

    Each file holds `wiki<TAB>username` rows; the file's role determines
    the recorded source (a third column, if present, is ignored here).
    Rows with an empty username are skipped and counted.
    """
    roster = BotRoster()
    for paths, source in ((group_lists, SOURCE_CURRENT_GROUP),
                          (former_group_lists, SOURCE_FORMER_GROUP),
                          (category_member_lists, SOURCE_CATEGORY)):
        for path in paths:
            for wiki, username, _ in read_roster_tsv(path, source):
                roster.add(wiki, username, source)
    return roster


def load_roster(path: str | Path) -> BotRoster:
    """Load a roster from provenance JSONL or from plain TSV rows."""
    path = Path(path)
    roster = BotRoster()
    with open(path, "r", encoding="utf-8") as fp:
        head = fp.read(1)
        fp.seek(0)
        if head == "{":
            for lineno, line in enumerate(fp, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    wiki, username = rec["wiki"], rec["username"]
                    sources = rec.get("sources") or [SOURCE_CURRENT_GROUP]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise DataError(f"{path}:{lineno}: bad roster record "
                                    f"({exc})") from exc
                for source in sources:
                    roster.add(wiki, username, source)
        else:
            for wiki, username, source in read_roster_tsv(fp):
                roster.add(wiki, username, source)
    return roster


def write_roster_jsonl(roster: BotRoster, out: IO[str]) -> int:
    """Write accounts as JSONL with per-account source provenance."""
    n = 0
    for key in sorted(roster.accounts):
        account = roster.accounts[key]
        rec = {"wiki": account.wiki, "username": account.username,
               "sources": sorted(account.sources)}
        out.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")))
        out.write("\n")
        n += 1
    return n
