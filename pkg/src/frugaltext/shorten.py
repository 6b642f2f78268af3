"""Text shortening strategies and token-budget truncation.

Eight strategies operate on word-token lists before subword encoding:

  a1  keep everything (baseline)
  a2  drop stopwords (case-insensitive)
  a3  drop punctuation-only tokens
  a4  a2 then a3
  a5  a2, then drop non-punctuation words that occur exactly once in the
      original token list (case-insensitive counting on the original)
  b1  like a1, but truncation keeps the head and the tail of the sequence
  b2  like a2, with the same head-and-tail truncation
  c1  drop punctuation and every repeated occurrence of a word, keeping each
      word's first appearance (case-insensitive identity)

Truncation applies after subword encoding: head-only for the a-family and c1,
head-plus-tail (ceil/floor halves by default) for the b-family.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from .errors import ConfigError
from .tokenizer import SubwordVocab, is_punctuation, subword_tokenize


class Strategy(Enum):
    A1 = "a1"
    A2 = "a2"
    A3 = "a3"
    A4 = "a4"
    A5 = "a5"
    B1 = "b1"
    B2 = "b2"
    C1 = "c1"

    @classmethod
    def from_name(cls, name: str) -> "Strategy":
        try:
            return cls(name.lower())
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise ConfigError(f"unknown strategy {name!r} (expected one of: {valid})") from None

    @property
    def needs_stopwords(self) -> bool:
        return self in (Strategy.A2, Strategy.A4, Strategy.A5, Strategy.B2)

    @property
    def head_and_tail(self) -> bool:
        """True for strategies whose truncation keeps both ends of the text."""
        return self in (Strategy.B1, Strategy.B2)


ALL_STRATEGIES = tuple(Strategy)


class StopwordList:
    """Case-insensitive stopword membership, loadable from a one-per-line file."""

    def __init__(self, words: Sequence[str] = ()) -> None:
        self._words = {w.strip().lower() for w in words if w.strip()}

    @classmethod
    def from_file(cls, path: str | Path) -> "StopwordList":
        """Load stopwords from a UTF-8 file; '#' starts a comment line."""
        words: list[str] = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#"):
                    words.append(line)
        return cls(words)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self._words

    def __len__(self) -> int:
        return len(self._words)

    def __bool__(self) -> bool:
        return bool(self._words)


@dataclass(frozen=True)
class TokenBudget:
    """Maximum subword sequence length fed to a model."""

    max_tokens: int

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ConfigError(f"token budget must be positive, got {self.max_tokens}")


def _is_punct_token(token: str) -> bool:
    return bool(token) and all(is_punctuation(ch) for ch in token)


def apply_strategy(words: Sequence[str], strategy: Strategy,
                   stopwords: StopwordList | None = None) -> list[str]:
    """Shorten a word-token list. The output is always a subsequence of the input."""
    if strategy.needs_stopwords and not stopwords:
        raise ConfigError(f"strategy {strategy.value} requires a non-empty stopword list")

    if strategy in (Strategy.A1, Strategy.B1):
        return list(words)
    if strategy in (Strategy.A2, Strategy.B2):
        return [w for w in words if w not in stopwords]
    if strategy is Strategy.A3:
        return [w for w in words if not _is_punct_token(w)]
    if strategy is Strategy.A4:
        return [w for w in words if w not in stopwords and not _is_punct_token(w)]
    if strategy is Strategy.A5:
        # rarity is judged on the original token list, not the a2 output
        freq = Counter(w.lower() for w in words)
        return [
            w for w in words
            if w not in stopwords and (_is_punct_token(w) or freq[w.lower()] > 1)
        ]
    if strategy is Strategy.C1:
        seen: set[str] = set()
        out: list[str] = []
        for w in words:
            if _is_punct_token(w):
                continue
            key = w.lower()
            if key not in seen:
                seen.add(key)
                out.append(w)
        return out
    raise ConfigError(f"unhandled strategy {strategy!r}")


def truncate(words: Sequence[str], strategy: Strategy, budget: TokenBudget,
             vocab: SubwordVocab, head_ratio: float = 0.5) -> list[str]:
    """Encode words to subwords and cut the sequence down to the budget.

    Head-and-tail strategies keep the first ceil(budget * head_ratio) and the
    last budget - that many subwords; everything else keeps the head only. A
    sequence already within budget passes through whole.
    """
    if not 0.0 < head_ratio < 1.0:
        raise ConfigError(f"head_ratio must be in (0, 1), got {head_ratio}")
    subwords = subword_tokenize(words, vocab)
    limit = budget.max_tokens
    if len(subwords) <= limit:
        return subwords
    if strategy.head_and_tail:
        head = math.ceil(limit * head_ratio)
        tail = limit - head
        if tail == 0:
            return subwords[:head]
        return subwords[:head] + subwords[-tail:]
    return subwords[:limit]


def shorten_and_truncate(words: Sequence[str], strategy: Strategy,
                         budget: TokenBudget, vocab: SubwordVocab,
                         stopwords: StopwordList | None = None) -> list[str]:
    """Full shortening pipeline: strategy filter, subword encoding, budget cut."""
    return truncate(apply_strategy(words, strategy, stopwords), strategy, budget, vocab)
