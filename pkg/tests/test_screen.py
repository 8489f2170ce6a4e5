from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from botreverts.classify import ClassifiedRevert
from botreverts.screen import ScreenConfig, screen

UTC = timezone.utc
T0 = datetime(2013, 6, 1, tzinfo=UTC)
DAY = 86400


def mk(page_id=1, a="AlphaBot", b="BetaBot", ttr=600, rev_id=500,
       label="not_classified", wiki="en"):
    return ClassifiedRevert(
        wiki=wiki, page_id=page_id, namespace=0, reverting_bot=a,
        reverted_bot=b, reverting_rev_id=rev_id, reverted_rev_id=rev_id - 1,
        reverting_time=T0 + timedelta(seconds=rev_id),
        reverted_time=T0 + timedelta(seconds=rev_id - ttr),
        comment="", time_to_revert=ttr, year=2013, label=label)


def test_unreciprocated_fast_revert_excluded():
    kept, table = screen([mk(ttr=60)])
    assert kept == []
    assert sum(table.values()) == 0


def test_reciprocated_fast_pair_kept():
    pair = [mk(a="AlphaBot", b="BetaBot", ttr=2 * DAY, rev_id=500),
            mk(a="BetaBot", b="AlphaBot", ttr=2 * DAY, rev_id=502)]
    kept, table = screen(pair)
    assert kept == pair
    assert table[("en", "not_classified")] == 2


def test_reciprocated_but_slow_reverts_excluded():
    pair = [mk(ttr=200 * DAY, rev_id=500), mk(ttr=10 * DAY, rev_id=502)]
    kept, _ = screen(pair)
    assert [r.reverting_rev_id for r in kept] == [502]


def test_alternating_fight_fully_kept():
    fight = []
    for i in range(41):
        a, b = ("AlphaBot", "BetaBot") if i % 2 else ("BetaBot", "AlphaBot")
        fight.append(mk(a=a, b=b, ttr=300, rev_id=600 + 2 * i,
                        label="identified_botfight"))
    kept, table = screen(fight)
    assert len(kept) == 41
    assert table[("en", "identified_botfight")] == 41


def test_pairs_do_not_pool_across_pages():
    kept, _ = screen([mk(page_id=1, ttr=60, rev_id=500),
                      mk(page_id=2, ttr=60, rev_id=502)])
    assert kept == []


def test_count_table_matches_output():
    reverts = [mk(ttr=60, rev_id=500, label="identified_botfight"),
               mk(ttr=60, rev_id=502, label="fixing_double_redirect"),
               mk(ttr=400 * DAY, rev_id=504)]
    kept, table = screen(reverts)
    assert sum(table.values()) == len(kept) == 2


def test_config_validation():
    with pytest.raises(ValueError):
        ScreenConfig(ttr_threshold_seconds=0)
    with pytest.raises(ValueError):
        ScreenConfig(min_pair_reverts=1)
    config = ScreenConfig.from_days(90, 3)
    assert config.ttr_threshold_seconds == 90 * DAY
    assert config.min_pair_reverts == 3


revert_lists = st.lists(
    st.tuples(st.integers(1, 3), st.booleans(), st.integers(0, 400)),
    max_size=25)


@settings(max_examples=80)
@given(revert_lists)
def test_output_is_subset_of_input(items):
    reverts = [mk(page_id=p, a="AlphaBot" if flip else "BetaBot",
                  b="BetaBot" if flip else "AlphaBot",
                  ttr=days * DAY, rev_id=500 + 2 * i)
               for i, (p, flip, days) in enumerate(items)]
    kept, _ = screen(reverts)
    ids = {r.reverting_rev_id for r in reverts}
    assert all(r.reverting_rev_id in ids for r in kept)
    assert len(kept) <= len(reverts)


@settings(max_examples=80)
@given(revert_lists, st.sampled_from([30, 180, 400]),
       st.sampled_from([2, 3]))
def test_screen_is_monotone_in_config(items, ttr_days, min_pair):
    reverts = [mk(page_id=p, a="AlphaBot" if flip else "BetaBot",
                  b="BetaBot" if flip else "AlphaBot",
                  ttr=days * DAY, rev_id=500 + 2 * i)
               for i, (p, flip, days) in enumerate(items)]
    base, _ = screen(reverts, ScreenConfig.from_days(ttr_days, min_pair))
    looser_ttr, _ = screen(reverts,
                           ScreenConfig.from_days(ttr_days + 100, min_pair))
    tighter_pair, _ = screen(reverts,
                             ScreenConfig.from_days(ttr_days, min_pair + 1))
    base_ids = {r.reverting_rev_id for r in base}
    assert base_ids <= {r.reverting_rev_id for r in looser_ttr}
    assert {r.reverting_rev_id for r in tighter_pair} <= base_ids
