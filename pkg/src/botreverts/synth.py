"""Labeled synthetic revision histories for end-to-end verification.

Each scenario kind reproduces one real bot ecology whose mechanics are
well understood, so the generator can emit both the history and the
ground truth about it:

* double_redirect / interwiki — humans rename pages back and forth and
  maintenance bots re-point links, recreating earlier page states.  True
  identity reverts, no conflict.
* protection_template / orphan_template — one bot adds a dated notice,
  another removes it when the condition clears.  The removal restores the
  base state; protection episodes last exactly 7 or 30 days.
* botfight_pair — two bots with opposed directives alternate between two
  states at minute-scale lags.  Every alternation from the third edit on
  is a revert, and all of them are genuine conflict.

Checksums are hashes of simulated page-state tokens: two revisions share
a checksum exactly when they represent the same state, which is the one
property identity-revert detection relies on.  Output is fully
deterministic under the scenario seed.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Mapping

from .classify import NOT_CLASSIFIED, ClassifiedRevert
from .detect import DirectedBotRevert
from .errors import DataError
from .ingest import PageHistory, RevisionMeta, write_revisions_jsonl
from .roster import SOURCE_CURRENT_GROUP, BotRoster

KINDS = ("double_redirect", "interwiki", "protection_template",
         "orphan_template", "botfight_pair", "mixed")
SUPPORTED_WIKIS = ("en", "de", "es", "fr", "ja", "pt", "zh")

START = datetime(2012, 1, 1, tzinfo=timezone.utc)
DAY = 86_400

FIGHT_BOTS = ("CyberBot II", "AnomieBOT")
HUMANS = ("Taylor Example", "Morgan Example", "Robin Example")

# Comment vocabulary, all drawn from the shipped rule table so that a
# classified pipeline run can be scored against the embedded truth.
DOUBLE_REDIRECT_COMMENTS = {
    "en": "Fixing double redirect to [[{t}]]",
    "de": "Bot: Korrigiere doppelte Weiterleitung auf [[{t}]]",
    "es": "Bot: Arreglando doble redirección hacia [[{t}]]",
    "fr": "Robot : répare double redirection à [[{t}]]",
    "ja": "ロボットによる: 二重リダイレクト修正 [[{t}]]",
    "pt": "Bot: Corrigindo redirecionamento duplo para [[{t}]]",
    "zh": "機器人:修復雙重重定向至[[{t}]]",
}
INTERWIKI_M1_COMMENTS = {
    "en": ("robot Adding: [[{fw}:{t}]]", "robot Removing: [[{fw}:{t}]]",
           "robot Modifying: [[{fw}:{t}]]"),
    "de": ("Bot: Ergänze: [[{fw}:{t}]]", "Bot: Entferne: [[{fw}:{t}]]",
           "Bot: Ändere: [[{fw}:{t}]]"),
    "es": ("robot Añadido: [[{fw}:{t}]]", "robot Eliminado: [[{fw}:{t}]]",
           "robot Modificado: [[{fw}:{t}]]"),
    "fr": ("robot Ajoute: [[{fw}:{t}]]", "robot Retire: [[{fw}:{t}]]",
           "robot Modifie: [[{fw}:{t}]]"),
    "ja": ("ロボットによる 追加: [[{fw}:{t}]]",
           "ロボットによる 除去: [[{fw}:{t}]]",
           "ロボットによる 変更: [[{fw}:{t}]]"),
    "pt": ("robô Adicionando: [[{fw}:{t}]]", "robô A remover: [[{fw}:{t}]]",
           "robô Modificando: [[{fw}:{t}]]"),
    "zh": ("機器人 新增: [[{fw}:{t}]]", "機器人 移除: [[{fw}:{t}]]",
           "機器人 修改: [[{fw}:{t}]]"),
}
INTERWIKI_M2_COMMENTS = {
    "en": "Bot: Updating links to [[{fw}:{t}]]",
    "de": "Bot: Aktualisiere Links: [[{fw}:{t}]]",
    "es": "Bot: Actualizando enlaces: [[{fw}:{t}]]",
    "fr": "Bot : Mise à jour des liens : [[{fw}:{t}]]",
    "ja": "Bot: リンク更新: [[{fw}:{t}]]",
    "pt": "Bot: Atualizando ligações: [[{fw}:{t}]]",
    "zh": "Bot: 更新連結: [[{fw}:{t}]]",
}
PROTECTION_ADD_COMMENT = "Adding {{{{pp-protected}}}} (case {e})"
PROTECTION_REMOVE_COMMENT = \
    "Removing protection template from unprotected page (bot)"
ORPHAN_ADD_COMMENT = "Tagging orphan article {{{{Orphan|date=case {e}}}}}"
ORPHAN_REMOVE_COMMENT = "Removing orphan tag: page now has incoming links"
FIGHT_COMMENTS = ("Rescuing 1 sources. #IABot",
                  'Rescuing orphaned refs ("broken_ref" from rev 1)')


@dataclass(frozen=True)
class SynthScenario:
    """Generator parameters; the seed fully determines the output.

    `events_per_page` means human renames for the link-fixing kinds,
    template episodes for the template kinds, and the revert count for
    botfight_pair.  `bots` sizes the maintenance pool for the link-fixing
    kinds (0 swaps in human actors everywhere); template kinds use one
    adder and one remover, and fights always use the named pair.
    """

    kind: str
    seed: int = 0
    wiki: str = "en"
    pages: int = 1
    bots: int = 2
    events_per_page: int = 2
    rename_gap_days: float = 60.0
    span_days: float = 4.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown scenario kind {self.kind!r}")
        if self.wiki not in SUPPORTED_WIKIS:
            raise DataError(f"unsupported wiki {self.wiki!r}")
        if self.pages < 1:
            raise ValueError("pages must be >= 1")
        if self.bots < 0:
            raise ValueError("bots must be >= 0")
        if self.events_per_page < 1:
            raise ValueError("events_per_page must be >= 1")
        if self.rename_gap_days <= 0:
            raise ValueError("rename_gap_days must be positive")
        if self.span_days <= 0:
            raise ValueError("span_days must be positive")


SCENARIO_DEFAULTS: dict[str, dict] = {
    "double_redirect": {"pages": 1, "events_per_page": 2},
    "interwiki": {"pages": 2, "events_per_page": 2},
    "protection_template": {"pages": 10, "events_per_page": 10},
    "orphan_template": {"pages": 5, "events_per_page": 4},
    "botfight_pair": {"pages": 1, "events_per_page": 41, "span_days": 4.0},
    "mixed": {"pages": 2, "events_per_page": 7, "span_days": 2.0},
}


def scenario(kind: str, **overrides) -> SynthScenario:
    params = dict(SCENARIO_DEFAULTS.get(kind, {}))
    params.update(overrides)
    return SynthScenario(kind=kind, **params)


@dataclass(frozen=True)
class GroundTruthLabel:
    rev_id: int
    expected_is_revert: bool
    expected_label: str
    expected_conflict: bool


@dataclass
class SynthResult:
    scenario: SynthScenario
    pages: list[PageHistory]
    truth: dict[int, GroundTruthLabel]
    roster: BotRoster
    bot_names: list[str]

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        corpus = out_dir / "corpus.jsonl"
        truth = out_dir / "truth.jsonl"
        roster = out_dir / "roster.tsv"
        with open(corpus, "w", encoding="utf-8") as fp:
            write_revisions_jsonl(self.pages, fp)
        with open(truth, "w", encoding="utf-8") as fp:
            write_truth_jsonl(self.truth, fp)
        with open(roster, "w", encoding="utf-8") as fp:
            for name in sorted(self.bot_names):
                fp.write(f"{self.scenario.wiki}\t{name}\t"
                         f"{SOURCE_CURRENT_GROUP}\n")
        return {"corpus": corpus, "truth": truth, "roster": roster}


def _base36(n: int) -> str:
    digits = "0123456789abcdefghijklmnopqrstuvwxyz"
    out = []
    while n:
        n, rem = divmod(n, 36)
        out.append(digits[rem])
    return "".join(reversed(out)) or "0"


def state_checksum(wiki: str, page_id: int, state: str) -> str:
    """Deterministic content hash for a simulated page state."""
    digest = hashlib.sha1(f"{wiki}:{page_id}:{state}".encode()).hexdigest()
    return _base36(int(digest, 16))


@dataclass(slots=True)
class _Planned:
    at: int                 # seconds since START
    actor: str
    state: str
    comment: str
    family: str | None      # expected label family; None for human edits
    fight: bool = False


class _Generator:
    def __init__(self, spec: SynthScenario):
        self.spec = spec
        self.rng = random.Random(spec.seed)
        self.next_page_id = 1001
        self.next_rev_id = 50_001
        self.bot_names: set[str] = set()
        self.pages: list[PageHistory] = []
        self.truth: dict[int, GroundTruthLabel] = {}

    # -- actor pools ------------------------------------------------------

    def _pool(self, prefix: str, count: int) -> list[str]:
        if self.spec.bots == 0:
            return list(HUMANS[:max(2, min(count, len(HUMANS)))])
        names = [f"{prefix}{i + 1}" for i in range(count)]
        self.bot_names.update(names)
        return names

    def _pair(self, add_name: str, remove_name: str) -> tuple[str, str]:
        if self.spec.bots == 0:
            return HUMANS[0], HUMANS[1]
        self.bot_names.update((add_name, remove_name))
        return add_name, remove_name

    # -- page builders ----------------------------------------------------

    def _emit(self, title: str, planned: list[_Planned]) -> None:
        page_id = self.next_page_id
        self.next_page_id += 1
        wiki = self.spec.wiki
        revs = []
        for p in planned:
            rev_id = self.next_rev_id
            self.next_rev_id += 1
            revs.append((RevisionMeta(
                wiki, page_id, title, 0, rev_id,
                START + timedelta(seconds=p.at), p.actor, p.comment,
                state_checksum(wiki, page_id, p.state)), p))
        revert_ids = _expected_revert_ids([r for r, _ in revs],
                                          self.bot_names)
        for rev, p in revs:
            # Only bot revisions are labeled; human stand-ins (bots=0)
            # can never appear in bot-bot pipeline output.
            if p.family is None or rev.actor not in self.bot_names:
                continue
            is_revert = rev.rev_id in revert_ids
            self.truth[rev.rev_id] = GroundTruthLabel(
                rev.rev_id, is_revert, p.family, p.fight and is_revert)
        self.pages.append(PageHistory(wiki, page_id, 0, title,
                                      [r for r, _ in revs]))

    def _fix_cycle_page(self, renames: int, fixers: list[str],
                        states: tuple[str, str], comment_for,
                        label: str) -> None:
        """Shared skeleton: human renames trigger alternating bot fixes."""
        rng = self.rng
        title = f"Synth page {self.next_page_id}"
        clock = int(rng.uniform(0, 30) * DAY)
        planned = [_Planned(clock, HUMANS[0], states[0],
                            "Created page", None)]
        for k in range(renames):
            clock += max(3600, int(rng.expovariate(
                1.0 / self.spec.rename_gap_days) * DAY))
            # Maintenance lag: log-normal, median ~6 hours.
            clock += max(60, int(rng.lognormvariate(10.6, 1.0)))
            planned.append(_Planned(clock, fixers[k % len(fixers)],
                                    states[(k + 1) % 2], comment_for(k),
                                    label))
        self._emit(title, planned)

    def build_double_redirect(self, pages: int, renames: int) -> None:
        fixers = self._pool("DoubleFixBot", max(1, self.spec.bots))
        wiki = self.spec.wiki
        for _ in range(pages):
            base = f"Topic {self.next_page_id}"
            targets = (f"{base} A", f"{base} B")

            def comment_for(k, targets=targets):
                return DOUBLE_REDIRECT_COMMENTS[wiki].format(
                    t=targets[(k + 1) % 2])

            self._fix_cycle_page(renames, fixers,
                                 ("redirect A", "redirect B"), comment_for,
                                 "fixing_double_redirect")

    def build_interwiki(self, pages: int, renames: int) -> None:
        fixers = self._pool("IwikiSyncBot", max(1, self.spec.bots))
        wiki = self.spec.wiki
        foreign = [w for w in SUPPORTED_WIKIS if w != wiki]
        for i in range(pages):
            method1 = i % 2 == 0
            fw = self.rng.choice(foreign)
            base = f"Topic {self.next_page_id}"

            def comment_for(k, fw=fw, base=base, method1=method1):
                if method1:
                    templates = INTERWIKI_M1_COMMENTS[wiki]
                    return templates[k % len(templates)].format(fw=fw, t=base)
                return INTERWIKI_M2_COMMENTS[wiki].format(fw=fw, t=base)

            self._fix_cycle_page(renames, fixers, ("links A", "links B"),
                                 comment_for,
                                 "interwiki_cleanup_m1" if method1
                                 else "interwiki_cleanup_m2")

    def _template_episode_page(self, episodes: int, actors: tuple[str, str],
                               duration_days_for, add_comment_for,
                               remove_comment: str, label: str) -> None:
        rng = self.rng
        add_bot, remove_bot = actors
        title = f"Synth page {self.next_page_id}"
        clock = int(rng.uniform(0, 30) * DAY)
        planned = [_Planned(clock, HUMANS[0], "base", "Created page", None)]
        for e in range(episodes):
            clock += max(3600, int(rng.uniform(3, 45) * DAY))
            planned.append(_Planned(clock, add_bot, f"tagged-{e}",
                                    add_comment_for(e), label))
            clock += int(duration_days_for() * DAY)
            planned.append(_Planned(clock, remove_bot, "base",
                                    remove_comment, label))
        self._emit(title, planned)

    def build_protection(self, pages: int, episodes: int) -> None:
        actors = self._pair("ProtNoticeBot", "ProtClearBot")
        for _ in range(pages):
            self._template_episode_page(
                episodes, actors,
                lambda: self.rng.choice((7, 30)),
                lambda e: PROTECTION_ADD_COMMENT.format(e=e),
                PROTECTION_REMOVE_COMMENT, "protection_template_cleanup")

    def build_orphan(self, pages: int, episodes: int) -> None:
        actors = self._pair("OrphanTagBot", "OrphanClearBot")
        for _ in range(pages):
            self._template_episode_page(
                episodes, actors,
                # Days until the tag clears: log-normal, median ~3 days.
                lambda: max(0.01, self.rng.lognormvariate(1.1, 1.0)),
                lambda e: ORPHAN_ADD_COMMENT.format(e=e),
                ORPHAN_REMOVE_COMMENT, "template_work")

    def build_botfight(self, pages: int, reverts: int,
                       span_days: float) -> None:
        rng = self.rng
        if self.spec.bots == 0:
            actors = (HUMANS[0], HUMANS[1])
        else:
            actors = FIGHT_BOTS
            self.bot_names.update(actors)
        for _ in range(pages):
            title = f"Synth page {self.next_page_id}"
            n_revs = reverts + 2
            weights = [rng.uniform(0.5, 1.5) for _ in range(n_revs - 1)]
            scale = span_days * DAY * 0.98 / sum(weights)
            clock = int(rng.uniform(0, 30) * DAY)
            planned = []
            for k in range(n_revs):
                if k:
                    clock += max(1, int(weights[k - 1] * scale))
                planned.append(_Planned(
                    clock, actors[k % 2], ("state X", "state Y")[k % 2],
                    FIGHT_COMMENTS[k % 2], "identified_botfight",
                    fight=True))
            self._emit(title, planned)

    def build(self) -> SynthResult:
        spec = self.spec
        if spec.kind == "double_redirect":
            self.build_double_redirect(spec.pages, spec.events_per_page)
        elif spec.kind == "interwiki":
            self.build_interwiki(spec.pages, spec.events_per_page)
        elif spec.kind == "protection_template":
            self.build_protection(spec.pages, spec.events_per_page)
        elif spec.kind == "orphan_template":
            self.build_orphan(spec.pages, spec.events_per_page)
        elif spec.kind == "botfight_pair":
            self.build_botfight(spec.pages, spec.events_per_page,
                                spec.span_days)
        else:  # mixed: all non-conflict kinds unreciprocated, one fight page
            self.build_double_redirect(spec.pages, 2)
            self.build_interwiki(spec.pages, 2)
            self.build_protection(spec.pages, 1)
            self.build_orphan(spec.pages, 1)
            self.build_botfight(1, spec.events_per_page, spec.span_days)
        roster = BotRoster()
        for name in sorted(self.bot_names):
            roster.add(spec.wiki, name, SOURCE_CURRENT_GROUP)
        return SynthResult(spec, self.pages, self.truth, roster,
                           sorted(self.bot_names))


def _expected_revert_ids(revs: list[RevisionMeta],
                         bot_names: set[str]) -> set[int]:
    """Reverting rev_ids of bot-bot directed reverts, unbounded lookback.

    Nearest same-checksum rule, null edits excluded, closest reverted
    revision (always the immediate predecessor) must be a different bot.
    Intentionally independent of the detector implementation.
    """
    ids: set[int] = set()
    for i, rev in enumerate(revs):
        if rev.checksum is None:
            continue
        nearest = -1
        for j in range(i - 1, -1, -1):
            if revs[j].checksum == rev.checksum:
                nearest = j
                break
        if nearest < 0 or nearest == i - 1:
            continue
        closest = revs[i - 1]
        if rev.actor in bot_names and closest.actor in bot_names \
                and rev.actor != closest.actor:
            ids.add(rev.rev_id)
    return ids


def generate(spec: SynthScenario) -> SynthResult:
    """Generate a labeled corpus; byte-identical for identical scenarios."""
    return _Generator(spec).build()


def write_truth_jsonl(truth: Mapping[int, GroundTruthLabel], out) -> int:
    n = 0
    for rev_id in sorted(truth):
        t = truth[rev_id]
        out.write(json.dumps({
            "rev_id": t.rev_id,
            "expected_is_revert": t.expected_is_revert,
            "expected_label": t.expected_label,
            "expected_conflict": t.expected_conflict,
        }, separators=(",", ":")))
        out.write("\n")
        n += 1
    return n


def load_truth(path: str | Path) -> dict[int, GroundTruthLabel]:
    truth: dict[int, GroundTruthLabel] = {}
    with open(path, "r", encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                label = GroundTruthLabel(
                    rec["rev_id"], rec["expected_is_revert"],
                    rec["expected_label"], rec["expected_conflict"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad truth record "
                                f"({exc})") from exc
            truth[label.rev_id] = label
    return truth


@dataclass(frozen=True)
class StageScore:
    precision: float
    recall: float
    predicted: int
    relevant: int


@dataclass(frozen=True)
class PipelineScore:
    detection: StageScore
    classification: StageScore | None
    screening: StageScore | None
    label_mismatches: tuple[int, ...]

    def as_dict(self) -> dict:
        def stage(s):
            return None if s is None else {
                "precision": s.precision, "recall": s.recall,
                "predicted": s.predicted, "relevant": s.relevant}
        return {"detection": stage(self.detection),
                "classification": stage(self.classification),
                "screening": stage(self.screening),
                "label_mismatches": list(self.label_mismatches)}


def _pr(predicted: set[int], relevant: set[int]) -> StageScore:
    hit = len(predicted & relevant)
    precision = hit / len(predicted) if predicted else 1.0
    recall = hit / len(relevant) if relevant else 1.0
    return StageScore(precision, recall, len(predicted), len(relevant))


def score(truth: Mapping[int, GroundTruthLabel],
          reverts: Iterable[DirectedBotRevert],
          screened: Iterable[DirectedBotRevert] | None = None,
          ) -> PipelineScore:
    """Per-stage precision/recall of pipeline output against the truth.

    Detection compares reverting rev_ids against expected reverts;
    classification (present when the input carries labels) credits a
    revert only when its label equals the expected one; screening compares
    the screened subset against expected conflict.  A rev_id in the output
    but absent from the truth fails hard: the two refer to different runs.
    """
    reverts = list(reverts)
    detected = {r.reverting_rev_id for r in reverts}
    missing = sorted(detected - set(truth))
    if missing:
        raise DataError(f"rev_ids missing from truth file: {missing[:10]}"
                        f"{'...' if len(missing) > 10 else ''}")
    relevant = {rid for rid, t in truth.items() if t.expected_is_revert}
    detection = _pr(detected, relevant)

    classification = None
    mismatches: tuple[int, ...] = ()
    has_labels = any(isinstance(r, ClassifiedRevert) for r in reverts)
    if has_labels:
        labels = {r.reverting_rev_id: getattr(r, "label", NOT_CLASSIFIED)
                  for r in reverts}
        correct = {rid for rid in relevant
                   if labels.get(rid) == truth[rid].expected_label}
        labeled = {rid for rid, lab in labels.items()
                   if lab != NOT_CLASSIFIED}
        good = {rid for rid in labeled
                if truth[rid].expected_is_revert
                and truth[rid].expected_label == labels[rid]}
        precision = len(good) / len(labeled) if labeled else 1.0
        recall = len(correct) / len(relevant) if relevant else 1.0
        classification = StageScore(precision, recall, len(labeled),
                                    len(relevant))
        mismatches = tuple(sorted(
            rid for rid in relevant & detected
            if labels.get(rid) != truth[rid].expected_label))

    screening = None
    if screened is not None:
        screened_ids = {r.reverting_rev_id for r in screened}
        unknown = sorted(screened_ids - set(truth))
        if unknown:
            raise DataError(f"screened rev_ids missing from truth file: "
                            f"{unknown[:10]}")
        conflict = {rid for rid, t in truth.items() if t.expected_conflict}
        screening = _pr(screened_ids, conflict)

    return PipelineScore(detection, classification, screening, mismatches)
