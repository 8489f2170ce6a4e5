from __future__ import annotations

import io
import json

import pytest

from botreverts.classify import (RuleSet, classify_all,
                                 load_default_rules)
from botreverts.detect import closest_pair, detect_reverts, filter_bot_bot
from botreverts.errors import DataError
from botreverts.ingest import write_revisions_jsonl
from botreverts.metrics import pair_histogram, pair_page_stats
from botreverts.screen import screen
from botreverts.synth import (SUPPORTED_WIKIS, SynthScenario, generate,
                              load_truth, scenario, score, state_checksum,
                              write_truth_jsonl)


def run_detection(result, radius=15, rules=None):
    reverts = []
    for page in result.pages:
        pairs = [closest_pair(e) for e in detect_reverts(page, radius)]
        reverts.extend(filter_bot_bot(pairs, result.roster))
    if rules is None:
        return reverts
    return list(classify_all(reverts, rules))


def corpus_bytes(result) -> bytes:
    buf = io.StringIO()
    write_revisions_jsonl(result.pages, buf)
    truth = io.StringIO()
    write_truth_jsonl(result.truth, truth)
    return (buf.getvalue() + "===\n" + truth.getvalue()).encode()


def test_same_seed_is_byte_identical():
    a = generate(scenario("mixed", seed=5))
    b = generate(scenario("mixed", seed=5))
    assert corpus_bytes(a) == corpus_bytes(b)
    c = generate(scenario("mixed", seed=6))
    assert corpus_bytes(c) != corpus_bytes(a)


def test_double_redirect_two_renames_two_bots():
    result = generate(scenario("double_redirect", seed=1, pages=1,
                               events_per_page=2, bots=2))
    rules = load_default_rules()
    classified = run_detection(result, rules=rules)
    assert len(classified) >= 1
    assert {r.label for r in classified} == {"fixing_double_redirect"}
    kept, _ = screen(classified)
    assert kept == []


def test_zero_bot_scenario_has_no_bot_bot_reverts():
    result = generate(scenario("double_redirect", seed=2, bots=0,
                               events_per_page=4))
    assert run_detection(result) == []
    assert len(result.roster) == 0
    assert result.truth == {}


def test_non_conflict_kinds_never_expect_conflict():
    for kind in ("double_redirect", "interwiki", "protection_template",
                 "orphan_template"):
        result = generate(scenario(kind, seed=3))
        assert all(not t.expected_conflict for t in result.truth.values())


def test_fight_conflict_labels_only_on_reverts():
    result = generate(scenario("botfight_pair", seed=4, events_per_page=9))
    conflict = [t for t in result.truth.values() if t.expected_conflict]
    assert len(conflict) == 9
    assert all(t.expected_is_revert for t in conflict)
    assert all(t.expected_label == "identified_botfight"
               for t in result.truth.values())


def test_checksums_identify_states():
    result = generate(scenario("protection_template", seed=5, pages=1,
                               events_per_page=3))
    [page] = result.pages
    by_checksum = {}
    for rev in page.revisions:
        by_checksum.setdefault(rev.checksum, set()).add(rev.rev_id)
    # base state recurs (creation + every removal); tagged states are unique
    sizes = sorted(len(v) for v in by_checksum.values())
    assert sizes == [1, 1, 1, 4]
    assert state_checksum("en", 1, "s") == state_checksum("en", 1, "s")
    assert state_checksum("en", 1, "s") != state_checksum("en", 2, "s")


def test_detector_agrees_with_embedded_truth_at_default_radius():
    for kind in ("double_redirect", "interwiki", "protection_template",
                 "orphan_template", "botfight_pair", "mixed"):
        result = generate(scenario(kind, seed=6))
        detected = {r.reverting_rev_id for r in run_detection(result)}
        expected = {rid for rid, t in result.truth.items()
                    if t.expected_is_revert}
        assert detected == expected, kind


def test_comment_vocabulary_matches_rules_everywhere():
    rules = load_default_rules()
    for wiki in SUPPORTED_WIKIS:
        for kind in ("double_redirect", "interwiki", "protection_template",
                     "orphan_template", "botfight_pair"):
            result = generate(scenario(kind, seed=7, wiki=wiki))
            classified = run_detection(result, rules=rules)
            wrong = [(r.comment, r.label) for r in classified
                     if r.label != result.truth[r.reverting_rev_id]
                     .expected_label]
            assert not wrong, (wiki, kind, wrong[:3])


def test_score_perfect_pipeline():
    result = generate(scenario("mixed", seed=8))
    classified = run_detection(result, rules=load_default_rules())
    kept, _ = screen(classified)
    s = score(result.truth, classified, kept)
    assert s.detection.precision == s.detection.recall == 1.0
    assert s.classification.precision == s.classification.recall == 1.0
    assert s.screening.precision == s.screening.recall == 1.0
    assert s.label_mismatches == ()


def test_score_empty_ruleset_zeroes_classification_only():
    result = generate(scenario("double_redirect", seed=9))
    classified = run_detection(result, rules=RuleSet((), None))
    s = score(result.truth, classified)
    assert s.detection.recall == 1.0
    assert s.classification.recall == 0.0
    assert s.classification.precision == 1.0   # vacuous: nothing labeled
    assert s.label_mismatches


def test_score_detection_recall_drops_with_radius_one():
    result = generate(scenario("botfight_pair", seed=10,
                               events_per_page=5))
    s = score(result.truth, run_detection(result, radius=1))
    assert s.detection.recall < 1.0
    assert s.detection.precision == 1.0


def test_score_rejects_unknown_rev_ids():
    result = generate(scenario("double_redirect", seed=11))
    reverts = run_detection(result)
    assert reverts
    truth = dict(result.truth)
    truth.pop(reverts[0].reverting_rev_id)
    with pytest.raises(DataError, match="missing from truth"):
        score(truth, reverts)


def test_scenario_validation():
    with pytest.raises(DataError):
        scenario("nonsense")
    with pytest.raises(DataError):
        scenario("mixed", wiki="xx")
    with pytest.raises(ValueError):
        scenario("mixed", pages=0)
    with pytest.raises(ValueError):
        scenario("mixed", span_days=-1)
    with pytest.raises(ValueError):
        scenario("mixed", rename_gap_days=0)
    with pytest.raises(ValueError):
        SynthScenario(kind="mixed", events_per_page=0)


def test_write_and_load_round_trip(tmp_path):
    result = generate(scenario("mixed", seed=12))
    paths = result.write(tmp_path)
    assert sorted(p.name for p in paths.values()) == \
        ["corpus.jsonl", "roster.tsv", "truth.jsonl"]
    truth = load_truth(paths["truth"])
    assert truth == result.truth
    roster_lines = paths["roster"].read_text(encoding="utf-8").splitlines()
    assert len(roster_lines) == len(result.bot_names)
    corpus_lines = paths["corpus"].read_text(encoding="utf-8").splitlines()
    assert all(json.loads(line)["wiki"] == "en" for line in corpus_lines)


def test_protection_reverts_have_exact_lags():
    result = generate(scenario("protection_template", seed=13, pages=2,
                               events_per_page=5))
    reverts = run_detection(result)
    lags = {r.time_to_revert for r in reverts}
    assert lags <= {7 * 86400, 30 * 86400}
    assert len(reverts) == 10


def test_botfight_pair_counts_and_span():
    result = generate(scenario("botfight_pair", seed=14))
    reverts = run_detection(result)
    assert len(reverts) == 41
    hist = pair_histogram(pair_page_stats(reverts))
    assert hist == {41: 1}
    [stat] = pair_page_stats(reverts)
    assert stat.duration_seconds <= 4 * 86400
