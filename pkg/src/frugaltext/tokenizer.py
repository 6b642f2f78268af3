"""Word and subword tokenization plus the vocabulary inflation audit.

The subword tokenizer is the greedy longest-match scheme used by WordPiece
vocabularies: per word, repeatedly take the longest vocabulary entry matching
the remaining prefix, with continuation pieces carrying a "##" marker. A word
with no match at some position becomes a single unknown token.

The audit measures how much longer a corpus gets under a given vocabulary:
per document, 100 * (subwords - words) / words. A vocabulary is recommended
for budget-constrained training when some document does not inflate at all
(min <= 0) and the average inflation stays at or below 15 percent.
"""

from __future__ import annotations

import csv
import itertools
import json
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Document, clean_whitespace
from .errors import DegenerateCorpusError, VocabError

CONTINUATION_PREFIX = "##"
UNKNOWN_TOKEN = "[UNK]"

RECOMMEND_MIN_PCT = 0.0
RECOMMEND_AVG_PCT = 15.0


def is_punctuation(ch: str) -> bool:
    """True for characters in any Unicode punctuation category (P*)."""
    return unicodedata.category(ch).startswith("P")


def word_tokenize(text: str) -> list[str]:
    """Split on whitespace, detaching maximal punctuation runs as their own tokens.

    "Jakarta, ibu kota." -> ["Jakarta", ",", "ibu", "kota", "."]

    Joining the tokens reproduces the input minus its whitespace.
    """
    tokens: list[str] = []
    for chunk in text.split():
        for is_punct, run in itertools.groupby(chunk, key=is_punctuation):
            tokens.append("".join(run))
    return tokens


class SubwordVocab:
    """An ordered subword vocabulary with greedy longest-match lookup."""

    def __init__(self, entries: Iterable[str],
                 continuation_prefix: str = CONTINUATION_PREFIX,
                 unknown_token: str = UNKNOWN_TOKEN) -> None:
        self.continuation_prefix = continuation_prefix
        self.unknown_token = unknown_token
        self._entries: dict[str, int] = {}
        for i, entry in enumerate(entries):
            if entry in self._entries:
                raise VocabError(f"duplicate vocabulary entry {entry!r}")
            self._entries[entry] = i
        if not self._entries:
            raise VocabError("vocabulary is empty")
        if unknown_token not in self._entries:
            raise VocabError(f"vocabulary lacks the unknown token {unknown_token!r}")

    def __contains__(self, token: str) -> bool:
        return token in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterable[str]:
        return iter(self._entries)

    @classmethod
    def from_file(cls, path: str | Path, **kwargs) -> "SubwordVocab":
        """Load a vocabulary file: one token per line, blank lines ignored."""
        entries: list[str] = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                token = line.strip()
                if token:
                    entries.append(token)
        return cls(entries, **kwargs)


def subword_tokenize(words: Sequence[str], vocab: SubwordVocab) -> list[str]:
    """Greedy longest-match segmentation of each word into vocabulary pieces.

    Continuation pieces (matches after the first) are looked up and emitted
    with the continuation prefix. A word that cannot be segmented at some
    position collapses to the single unknown token.
    """
    out: list[str] = []
    for word in words:
        out.extend(_segment_word(word, vocab))
    return out


def _segment_word(word: str, vocab: SubwordVocab) -> list[str]:
    if not word:
        return []
    pieces: list[str] = []
    start = 0
    n = len(word)
    while start < n:
        end = n
        match = None
        while end > start:
            piece = word[start:end]
            if start > 0:
                piece = vocab.continuation_prefix + piece
            if piece in vocab:
                match = piece
                break
            end -= 1
        if match is None:
            return [vocab.unknown_token]
        pieces.append(match)
        start = end
    return pieces


@dataclass
class AuditReport:
    """Corpus-level summary of subword inflation percentages."""

    max_pct: float
    min_pct: float
    avg_pct: float
    n_docs: int
    ratios: list[float]
    per_doc: list[tuple[str, int, int, float]]  # (id, words, subwords, pct)

    @property
    def recommended(self) -> bool:
        return self.min_pct <= RECOMMEND_MIN_PCT and self.avg_pct <= RECOMMEND_AVG_PCT

    def to_json(self) -> str:
        return json.dumps({
            "max_pct": self.max_pct,
            "min_pct": self.min_pct,
            "avg_pct": self.avg_pct,
            "recommended": self.recommended,
            "n_docs": self.n_docs,
        })

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "words", "subwords", "pct"])
            for row in self.per_doc:
                writer.writerow(row)


def inflation_pct(word_count: int, subword_count: int) -> float:
    """Additional-length percentage of a subword encoding over the word count."""
    return 100.0 * (subword_count - word_count) / word_count


def audit(docs: Iterable[Document], vocab: SubwordVocab,
          clean: bool = True, word_tokenizer=word_tokenize) -> AuditReport:
    """Measure per-document subword inflation for a corpus under a vocabulary.

    The baseline length is whatever word_tokenizer yields (punctuation-
    detaching whitespace split by default). Documents with zero words carry
    no ratio and are skipped; a corpus with zero words overall is an error.
    Texts are whitespace-cleaned first unless clean=False.
    """
    ratios: list[float] = []
    per_doc: list[tuple[str, int, int, float]] = []
    for doc in docs:
        text = clean_whitespace(doc.text) if clean else doc.text
        words = word_tokenizer(text)
        if not words:
            continue
        subwords = subword_tokenize(words, vocab)
        pct = inflation_pct(len(words), len(subwords))
        ratios.append(pct)
        per_doc.append((doc.id, len(words), len(subwords), pct))
    if not ratios:
        raise DegenerateCorpusError("no document in the corpus contains any words")
    return AuditReport(
        max_pct=max(ratios),
        min_pct=min(ratios),
        avg_pct=sum(ratios) / len(ratios),
        n_docs=len(ratios),
        ratios=ratios,
        per_doc=per_doc,
    )
