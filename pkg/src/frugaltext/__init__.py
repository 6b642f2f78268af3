"""Frugal text-classification toolkit.

Everything needed to measure subword inflation on a corpus, shorten
documents to a token budget, train a small classifier, and search
learning rate, epoch count and batch size on a fixed trial budget with
a crash-safe append-only ledger.
"""

from . import errors
from .corpus import (
    Document,
    FoldedCorpus,
    SplitView,
    clean_whitespace,
    dump_documents_jsonl,
    load_corpus_jsonl,
    macro_f1,
    make_split,
    upsample_balance,
)
from .tokenizer import AuditReport, SubwordVocab, audit, inflation_pct, word_tokenize
from .shorten import (
    StopwordList,
    Strategy,
    TokenBudget,
    apply_strategy,
    shorten_and_truncate,
    truncate,
)
from .grid import LrGridPoint, snap
from .optim import AdamW, OptimizerConfig, adamw_step
from .trainer import (
    EpochResult,
    Hyperparams,
    TrainerBackend,
    featurize,
    train_builtin,
)
from .backends import (
    BuiltinBackend,
    ExternalBackend,
    FixtureBackend,
    FixtureTable,
    SplitPaths,
    parse_backend_spec,
)
from .ledger import ALL_FOLDS, Ledger, TrialRecord
from .hpo import (
    Direction,
    SearchConfig,
    SearchState,
    SessionReport,
    classify_direction,
    pick_candidates,
    probe_batch_size,
    probe_ladder,
    reconstruct_state,
    select_best,
    session_run,
)
from .reference import reference_fixture_dict, reference_table, write_reference_fixture
from .report import render_search_report, render_status

__version__ = "0.1.0"

__all__ = [
    "errors",
    "Document", "FoldedCorpus", "SplitView", "clean_whitespace",
    "dump_documents_jsonl", "load_corpus_jsonl", "macro_f1", "make_split",
    "upsample_balance",
    "AuditReport", "SubwordVocab", "audit", "inflation_pct", "word_tokenize",
    "StopwordList", "Strategy", "TokenBudget", "apply_strategy",
    "shorten_and_truncate", "truncate",
    "LrGridPoint", "snap",
    "AdamW", "OptimizerConfig", "adamw_step",
    "EpochResult", "Hyperparams", "TrainerBackend", "featurize", "train_builtin",
    "BuiltinBackend", "ExternalBackend", "FixtureBackend", "FixtureTable",
    "SplitPaths", "parse_backend_spec",
    "ALL_FOLDS", "Ledger", "TrialRecord",
    "Direction", "SearchConfig", "SearchState", "SessionReport",
    "classify_direction", "pick_candidates", "probe_batch_size", "probe_ladder",
    "reconstruct_state", "select_best", "session_run",
    "reference_fixture_dict", "reference_table", "write_reference_fixture",
    "render_search_report", "render_status",
    "__version__",
]
