"""botreverts: streaming bot-bot revert analysis for MediaWiki histories."""

__version__ = "0.1.0"

from .errors import BotRevertsError, DataError, PipelineError
from .ingest import (IngestStats, PageHistory, RevisionMeta, parse_jsonl,
                     parse_timestamp, parse_xml_dump, write_revisions_jsonl)
from .roster import (BotAccount, BotRoster, is_bot, load_roster,
                     merge_sources, name_heuristic, normalize_username)
from .detect import (DirectedBotRevert, RevertEvent, closest_pair,
                     detect_reverts, filter_bot_bot)
from .metrics import (KdeCurve, PairPageStat, ReciprocationShares,
                      TtrSummary, kde_curve, pair_histogram,
                      pair_page_stats, reciprocation_shares, ttr_kde,
                      ttr_summary, yearly_counts)
from .classify import (ClassifiedRevert, ClassRule, RuleSet, classify,
                       classify_all, class_proportions, LABELS,
                       load_default_rules, load_rules,
                       sample_for_validation)
from .screen import ScreenConfig, screen
from .synth import (GroundTruthLabel, PipelineScore, StageScore,
                    SynthScenario, generate, load_truth, scenario, score)
from .report import PipelineConfig, PipelineResult, run_pipeline

__all__ = [name for name in dir() if not name.startswith("_")]
