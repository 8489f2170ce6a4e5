#!/usr/bin/env python3
"""Walk the canonical double-redirect case through the whole pipeline.

A human creates a redirect; after a page rename one bot re-points it;
after the rename is undone a second bot points it back, restoring the
original state byte for byte.  That third edit is an identity revert of
the second bot by every mechanical definition, and this script shows how
the pipeline reads it: detected, classified as double-redirect fixing,
and excluded by the fight screen because 273 days passed and the pair
never reciprocated.
"""

import hashlib
from datetime import datetime, timezone

from botreverts.classify import classify, load_default_rules
from botreverts.detect import closest_pair, detect_reverts, filter_bot_bot
from botreverts.ingest import PageHistory, RevisionMeta
from botreverts.roster import BotRoster
from botreverts.screen import screen

UTC = timezone.utc


def sha36(text: str) -> str:
    digits = "0123456789abcdefghijklmnopqrstuvwxyz"
    n = int(hashlib.sha1(text.encode()).hexdigest(), 16)
    out = []
    while n:
        n, r = divmod(n, 36)
        out.append(digits[r])
    return "".join(reversed(out))


STATE_PLAIN = "#REDIRECT [[Japan–United States relations]]"
STATE_SPACED = "#REDIRECT [[Japan – United States relations]]"

PAGE = PageHistory("en", 18717338, 0, "Japan-United States relations", [
    RevisionMeta("en", 18717338, "Japan-United States relations", 0,
                 224031785, datetime(2008, 7, 6, tzinfo=UTC),
                 "The Transhumanist",
                 "moved [[Japan-United States relations]] to "
                 "[[Japan–United States relations]]",
                 sha36(STATE_PLAIN)),
    RevisionMeta("en", 18717338, "Japan-United States relations", 0,
                 270913021, datetime(2009, 2, 15, tzinfo=UTC), "Xqbot",
                 "Bot: Fixing double redirect to "
                 "[[Japan – United States relations]]",
                 sha36(STATE_SPACED)),
    RevisionMeta("en", 18717338, "Japan-United States relations", 0,
                 325980337, datetime(2009, 11, 15, tzinfo=UTC),
                 "DarknessBot",
                 "Fixing double redirect to "
                 "[[Japan–United States relations]]",
                 sha36(STATE_PLAIN)),
])


def main() -> None:
    roster = BotRoster()
    roster.add("en", "Xqbot", "current_group")
    roster.add("en", "DarknessBot", "category")

    [event] = detect_reverts(PAGE, radius=15)
    print("revert event:")
    print(f"  reverting   rev {event.reverting.rev_id} by "
          f"{event.reverting.actor}")
    print(f"  reverted    {[r.rev_id for r in event.reverted]} "
          f"(by {[r.actor for r in event.reverted]})")
    print(f"  reverted_to rev {event.reverted_to.rev_id} by "
          f"{event.reverted_to.actor} "
          f"({event.reverted_to.timestamp:%Y-%m-%d})")

    [pair] = filter_bot_bot([closest_pair(event)], roster)
    days = pair.time_to_revert / 86400
    print(f"\ndirected pair: {pair.reverting_bot} -> {pair.reverted_bot}, "
          f"time to revert {days:.0f} days")

    labeled = classify(pair, load_default_rules())
    print(f"label: {labeled.label} (rule {labeled.matched_rule})")

    kept, _ = screen([labeled])
    verdict = "kept as suspected fight" if kept else \
        "excluded by the screen (unreciprocated, far over 180 days)"
    print(f"screen: {verdict}")


if __name__ == "__main__":
    main()
