from __future__ import annotations

from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from botreverts.detect import (closest_pair, detect_reverts, filter_bot_bot,
                               read_reverts_jsonl, revert_from_dict,
                               revert_to_dict)
from botreverts.roster import BotRoster
from helpers import events_as_indices, make_history, oracle_detect

UTC = timezone.utc

history_strategy = st.lists(
    st.one_of(st.none(), st.sampled_from("abc")), max_size=12)


def detect_indices(checksums, radius):
    page = make_history(checksums)
    return events_as_indices(page, detect_reverts(page, radius))


def test_all_distinct_checksums_no_events():
    assert detect_indices(["a", "b", "c"], 15) == []


def test_fixture_sequence_t_x_t(fixture_page):
    events = detect_reverts(fixture_page, 15)
    assert len(events) == 1
    event = events[0]
    assert event.reverting.actor == "DarknessBot"
    assert [r.actor for r in event.reverted] == ["Xqbot"]
    assert event.reverted_to.actor == "The Transhumanist"
    assert event.reverted_to.rev_id == 224031785


def test_null_edit_emits_nothing():
    assert detect_indices(["a", "a"], 15) == []
    assert detect_indices(["a", "a", "a"], 15) == []


def test_null_edit_then_later_revert():
    # [a, a, b, a]: last edit reverts b back to the state at index 1.
    assert detect_indices(["a", "a", "b", "a"], 15) == [(3, (2,), 1)]


def test_absent_checksums_never_match_but_can_be_reverted_over():
    assert detect_indices([None, None], 15) == []
    assert detect_indices(["a", None, "a"], 15) == [(2, (1,), 0)]
    assert detect_indices([None, "b", None], 15) == []


def test_radius_one_never_finds_events():
    # The only candidate within radius 1 is the immediate predecessor,
    # and matching it is a null edit.
    assert detect_indices(["a", "b", "a", "b", "a"], 1) == []


def test_radius_limits_lookback():
    seq = ["a", "b", "c", "a"]
    assert detect_indices(seq, 2) == []
    assert detect_indices(seq, 3) == [(3, (1, 2), 0)]


def test_nearest_match_wins():
    # Index 4 matches both 0 and 2; the nearest (2) is reverted_to.
    assert detect_indices(["a", "b", "a", "c", "a"], 15) == \
        [(2, (1,), 0), (4, (3,), 2)]


def test_same_checksum_members_excluded_from_reverted():
    # Between nearest match and reverting nothing equals the reverting
    # checksum by construction; oracle agreement covers it exhaustively.
    assert detect_indices(["a", "b", "b", "a"], 15) == [(3, (1, 2), 0)]


def test_radius_must_be_positive(fixture_page):
    with pytest.raises(ValueError):
        detect_reverts(fixture_page, 0)


@settings(max_examples=200)
@given(history_strategy, st.sampled_from([1, 2, 3, 15]))
def test_matches_brute_force_oracle(checksums, radius):
    assert detect_indices(checksums, radius) == \
        oracle_detect(checksums, radius)


@settings(max_examples=150)
@given(history_strategy, st.sampled_from([2, 3, 15]))
def test_event_invariants(checksums, radius):
    page = make_history(checksums)
    for event in detect_reverts(page, radius):
        assert event.reverting.checksum is not None
        assert event.reverting.checksum == event.reverted_to.checksum
        assert event.reverted
        assert len(event.reverted) <= radius
        order = [event.reverted_to, *event.reverted, event.reverting]
        keys = [r.sort_key() for r in order]
        assert keys == sorted(keys)
        assert all(r.checksum != event.reverting.checksum
                   for r in event.reverted)


@settings(max_examples=150)
@given(history_strategy, st.sampled_from([2, 3, 8]))
def test_enlarging_radius_keeps_events(checksums, radius):
    small = set(detect_indices(checksums, radius))
    large = set(detect_indices(checksums, radius + 5))
    assert small <= large


@settings(max_examples=100)
@given(history_strategy)
def test_detection_is_deterministic(checksums):
    page = make_history(checksums)
    first = detect_reverts(page, 15)
    second = detect_reverts(page, 15)
    assert first == second


def test_closest_pair_uses_latest_reverted():
    page = make_history(["a", "b", "c", None, "a"])
    events = detect_reverts(page, 15)
    assert len(events) == 1
    pair = closest_pair(events[0])
    assert pair.reverted_rev_id == 103   # the absent-checksum revision
    assert pair.reverting_rev_id == 104
    assert pair.time_to_revert == 3600
    assert pair.year == 2013


def test_closest_pair_singleton():
    page = make_history(["a", "b", "a"])
    pair = closest_pair(detect_reverts(page, 15)[0])
    assert pair.reverted_rev_id == 101


def test_fixture_pair_and_calendar_oracle(fixture_page):
    pair = closest_pair(detect_reverts(fixture_page, 15)[0])
    assert pair.reverting_bot == "DarknessBot"
    assert pair.reverted_bot == "Xqbot"
    # Independent calendar arithmetic for the expected gap.
    expected_days = (datetime(2009, 11, 15, tzinfo=UTC)
                     - datetime(2009, 2, 15, tzinfo=UTC)).days
    assert expected_days == 273
    assert pair.time_to_revert == expected_days * 86400


def bot_roster(*names, wiki="en"):
    roster = BotRoster()
    for name in names:
        roster.add(wiki, name, "current_group")
    return roster


def pair_for(actors):
    page = make_history(["a", "b", "a"], actors=actors)
    return closest_pair(detect_reverts(page, 15)[0])


def test_filter_keeps_bot_bot_only():
    roster = bot_roster("AlphaBot", "BetaBot")
    bot_bot = pair_for(["X", "AlphaBot", "BetaBot"])
    human_bot = pair_for(["X", "AlphaBot", "Casey"])
    ip_bot = pair_for(["X", "192.0.2.7", "BetaBot"])
    kept = list(filter_bot_bot([bot_bot, human_bot, ip_bot], roster))
    assert kept == [bot_bot]


def test_filter_drops_self_reverts_by_default():
    roster = bot_roster("AlphaBot")
    self_pair = pair_for(["X", "alphaBot", "AlphaBot"])
    assert list(filter_bot_bot([self_pair], roster)) == []
    assert list(filter_bot_bot([self_pair], roster,
                               include_self=True)) == [self_pair]


def test_revert_record_round_trip(fixture_page):
    pair = closest_pair(detect_reverts(fixture_page, 15)[0])
    rec = revert_to_dict(pair)
    assert revert_from_dict(rec) == pair
    import io
    import json
    assert list(read_reverts_jsonl(io.StringIO(json.dumps(rec) + "\n"))) \
        == [pair]
