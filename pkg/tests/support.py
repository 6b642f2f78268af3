"""Shared scaffolding for the test suite.

Holds the independently coded oracles (brute-force recounts, hand formulas),
synthetic data generators, and instrumented backend/ledger wrappers used by
the unit and acceptance tests. Oracles here deliberately avoid reusing the
library's own helpers wherever the point is to cross-check them.
"""

from __future__ import annotations

import random
import string
import unicodedata
from pathlib import Path

import numpy as np

from frugaltext.corpus import Document, FoldedCorpus
from frugaltext.grid import from_index, snap
from frugaltext.ledger import (
    STATUS_DONE,
    STATUS_FAILED,
    Ledger,
)
from frugaltext.shorten import StopwordList
from frugaltext.tokenizer import SubwordVocab
from frugaltext.trainer import EpochResult

# ---------------------------------------------------------------------------
# vocabularies


def char_vocab(extra: tuple[str, ...] = ()) -> SubwordVocab:
    """Single characters plus their continuation forms: segments any ASCII word."""
    chars = list(string.ascii_lowercase + string.ascii_uppercase
                 + string.digits + ".,!?;:-'\"()")
    entries = ["[UNK]"] + chars + ["##" + c for c in chars] + list(extra)
    return SubwordVocab(entries)


def word_vocab(words, extra: tuple[str, ...] = ()) -> SubwordVocab:
    """Whole words only; anything else becomes the unknown token."""
    entries = ["[UNK]"]
    seen = {"[UNK]"}
    for w in list(words) + list(extra):
        if w not in seen:
            seen.add(w)
            entries.append(w)
    return SubwordVocab(entries)


# ---------------------------------------------------------------------------
# brute-force oracles


def oracle_subword_count(word: str, entries: set[str]) -> int:
    """Greedy longest-match piece count, written independently of the library.

    Walks the word with explicit index arithmetic; returns 1 for the unknown
    fallback since the whole word collapses to one token.
    """
    count = 0
    pos = 0
    while pos < len(word):
        for end in range(len(word), pos, -1):
            piece = word[pos:end]
            if pos > 0:
                piece = "##" + piece
            if piece in entries:
                count += 1
                pos = end
                break
        else:
            return 1
    return count


def oracle_word_split(text: str) -> list[str]:
    """Whitespace split with punctuation runs detached, coded from scratch."""
    out: list[str] = []
    for chunk in text.split():
        run = ""
        run_is_punct = None
        for ch in chunk:
            p = unicodedata.category(ch).startswith("P")
            if run and p != run_is_punct:
                out.append(run)
                run = ""
            run += ch
            run_is_punct = p
        if run:
            out.append(run)
    return out


def oracle_audit(docs, entries: set[str]):
    """Per-document inflation percentages via the standalone counters above."""
    ratios = []
    for doc in docs:
        words = oracle_word_split(" ".join(doc.text.split()))
        if not words:
            continue
        subwords = sum(oracle_subword_count(w, entries) for w in words)
        ratios.append(100.0 * (subwords - len(words)) / len(words))
    return ratios


def oracle_macro_f1(tp: dict, fp: dict, fn: dict) -> float:
    classes = sorted(set(tp) | set(fp) | set(fn))
    scores = []
    for c in classes:
        denom = 2 * tp.get(c, 0) + fp.get(c, 0) + fn.get(c, 0)
        scores.append(2 * tp.get(c, 0) / denom if denom else 0.0)
    return sum(scores) / len(scores)


# ---------------------------------------------------------------------------
# synthetic corpora


CLASS_KEYWORDS = {
    "berita": ("pemerintah", "menteri", "kebijakan"),
    "olahraga": ("pertandingan", "pemain", "skor"),
    "teknologi": ("aplikasi", "perangkat", "algoritma"),
    "hiburan": ("konser", "penyanyi", "panggung"),
    "ekonomi": ("saham", "investasi", "inflasi"),
    "inspirasi": ("semangat", "motivasi", "impian"),
}

FILLER_WORDS = ("yang", "dan", "di", "ke", "pada", "untuk", "dengan", "itu")


def keyword_corpus(counts=(175, 130, 105, 85, 65, 40), n_folds: int = 5,
                   seed: int = 7):
    """A separable multi-class corpus: each class is marked by unique keywords.

    Returns (corpus, vocab, stopwords). Class sizes follow `counts`, so the
    corpus is imbalanced and exercises upsampling; filler words double as the
    stopword list so strategy a2 has something to remove.
    """
    labels = list(CLASS_KEYWORDS)
    if len(counts) != len(labels):
        raise ValueError("one count per class required")
    rng = random.Random(seed)
    docs: list[Document] = []
    for label, count in zip(labels, counts):
        keywords = CLASS_KEYWORDS[label]
        for i in range(count):
            words = [rng.choice(FILLER_WORDS) for _ in range(rng.randint(6, 12))]
            words += [rng.choice(keywords) for _ in range(rng.randint(4, 8))]
            rng.shuffle(words)
            docs.append(Document(id=f"{label}-{i}", label=label,
                                 text=" ".join(words)))
    rng.shuffle(docs)
    folds: list[list[Document]] = [[] for _ in range(n_folds)]
    for i, doc in enumerate(docs):
        folds[i % n_folds].append(doc)
    vocab_words = [w for kws in CLASS_KEYWORDS.values() for w in kws]
    vocab_words += list(FILLER_WORDS)
    return (FoldedCorpus(folds=folds),
            word_vocab(vocab_words),
            StopwordList(FILLER_WORDS))


# ---------------------------------------------------------------------------
# synthetic search surfaces


WINDOW_SIZE = 27
WINDOW_BASE = snap(1e-7).index
WINDOW = tuple(from_index(WINDOW_BASE + i) for i in range(WINDOW_SIZE))
EXHAUSTIVE_TRIALS = WINDOW_SIZE * 3 * 5  # every (point, epoch, fold) trial

_FOLD_OFFSETS = (-0.002, -0.001, 0.0, 0.001, 0.002)  # sums to zero


class SyntheticSurfaceBackend:
    """Serves a seeded F1 surface unimodal in LR for each epoch.

    The per-epoch peak sits inside the 27-point window and drifts downward a
    few grid steps as epochs grow, like a real LR/epoch trade-off. Per-fold
    offsets cancel in the mean, so the all-fold average at grid position i and
    epoch e is exactly base - curvature * (i - peak_e)^2.
    """

    deterministic = True

    def __init__(self, surface_seed: int) -> None:
        self.backend_id = f"surface:{surface_seed}"
        rng = np.random.default_rng(surface_seed)
        p1 = int(rng.integers(10, 23))
        p2 = max(p1 - int(rng.integers(0, 4)), 2)
        p3 = max(p2 - int(rng.integers(0, 4)), 2)
        self.peaks = (p1, p2, p3)
        self.base = 0.80
        self.curvature = 0.0008

    def value(self, index: int, epoch: int, fold: int) -> float:
        d = index - (WINDOW_BASE + self.peaks[epoch - 1])
        raw = self.base - self.curvature * d * d + _FOLD_OFFSETS[fold]
        return min(max(raw, 0.0), 1.0)

    def true_argmax(self, epoch: int):
        return WINDOW[self.peaks[epoch - 1]]

    def run_trial(self, hp, fold: int) -> list[EpochResult]:
        index = snap(hp.lr).index
        return [EpochResult(epoch=e, f1_test=self.value(index, e, fold),
                            valid_loss=0.5)
                for e in range(1, hp.epochs + 1)]

    def ping(self, batch_size: int) -> bool:
        return True

    def clone_for_worker(self):
        return self


class CountingBackend:
    """Delegating wrapper that records every (lr, bs, fold, epochs) attempt."""

    def __init__(self, inner) -> None:
        self.inner = inner
        self.backend_id = inner.backend_id
        self.deterministic = inner.deterministic
        self.calls: list[tuple[str, int, int, int]] = []

    def run_trial(self, hp, fold: int):
        self.calls.append((snap(hp.lr).label, hp.batch_size, fold, hp.epochs))
        return self.inner.run_trial(hp, fold)

    def ping(self, batch_size: int) -> bool:
        return self.inner.ping(batch_size)

    def clone_for_worker(self):
        return self


# ---------------------------------------------------------------------------
# fault injection


class Killed(Exception):
    """Simulated hard crash, thrown right after a row hits the disk."""


class KillingLedger(Ledger):
    """Crashes the session after every completed append.

    RUNNING markers do not trigger the crash; killing there would model a
    crash before any work happened and the harness would spin forever.
    """

    def append(self, record):
        stamped = super().append(record)
        if stamped.status in (STATUS_DONE, STATUS_FAILED):
            raise Killed(f"killed after seq {stamped.seq}")
        return stamped


def ledger_shape(path: str | Path) -> list[tuple]:
    """Projection of a ledger file for order-sensitive comparisons.

    Keeps everything deterministic about a row and drops wall-clock noise.
    """
    out = []
    for record in Ledger(path, fsync=False).records:
        out.append((record.seq, record.status, snap(record.lr).label,
                    record.batch_size, record.fold, record.epochs,
                    record.per_epoch_f1))
    return out
