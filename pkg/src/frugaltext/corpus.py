"""Corpus handling: folded JSONL corpora, splits, balancing, and F1 scoring."""

from __future__ import annotations

import json
import random
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    CorpusFormatError,
    EmptyCorpusError,
    FoldIndexError,
)

_WHITESPACE_RE = re.compile("[\n\r\t\xa0 ]+")
DEFAULT_VALID_FRACTION = 0.05


@dataclass(frozen=True)
class Document:
    """One labeled text record."""

    id: str
    label: str
    text: str


@dataclass
class FoldedCorpus:
    """A labeled corpus pre-partitioned into folds (test sets of a k-fold scheme)."""

    folds: list[list[Document]]
    valid_fraction: float = DEFAULT_VALID_FRACTION

    def __post_init__(self) -> None:
        if not self.folds or all(not fold for fold in self.folds):
            raise EmptyCorpusError("corpus has no documents")
        if not 0.0 <= self.valid_fraction < 1.0:
            raise ValueError(f"valid_fraction must be in [0, 1), got {self.valid_fraction}")
        seen: set[str] = set()
        for fold in self.folds:
            for doc in fold:
                if doc.id in seen:
                    raise CorpusFormatError(0, f"duplicate document id {doc.id!r}")
                seen.add(doc.id)

    @property
    def n_folds(self) -> int:
        return len(self.folds)

    @property
    def labels(self) -> set[str]:
        return {doc.label for fold in self.folds for doc in fold}

    def __len__(self) -> int:
        return sum(len(fold) for fold in self.folds)

    def documents(self) -> Iterable[Document]:
        for fold in self.folds:
            yield from fold


@dataclass(frozen=True)
class SplitView:
    """Train/valid/test materialization of one fold choice."""

    train: tuple[Document, ...]
    valid: tuple[Document, ...]
    test: tuple[Document, ...]
    test_fold_index: int
    seed: int


def clean_whitespace(text: str) -> str:
    """Collapse runs of newline, carriage return, tab, NBSP and space to one space.

    Leading/trailing whitespace is stripped. Idempotent.
    """
    return _WHITESPACE_RE.sub(" ", text).strip(" ")


def load_corpus_jsonl(path: str | Path, n_folds: int = 5,
                      valid_fraction: float = DEFAULT_VALID_FRACTION) -> FoldedCorpus:
    """Load a corpus from JSONL records {id, label, text, fold}.

    Any malformed line is fatal and reported with its 1-based line number.
    """
    folds: list[list[Document]] = [[] for _ in range(n_folds)]
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(line_no, f"invalid JSON: {exc}") from exc
            if not isinstance(rec, dict):
                raise CorpusFormatError(line_no, "record is not an object")
            for key in ("id", "label", "text", "fold"):
                if key not in rec:
                    raise CorpusFormatError(line_no, f"missing field {key!r}")
            doc_id, label, text, fold = rec["id"], rec["label"], rec["text"], rec["fold"]
            if not isinstance(doc_id, str) or not doc_id:
                raise CorpusFormatError(line_no, "id must be a non-empty string")
            if not isinstance(label, str) or not label:
                raise CorpusFormatError(line_no, "label must be a non-empty string")
            if not isinstance(text, str):
                raise CorpusFormatError(line_no, "text must be a string")
            if not isinstance(fold, int) or isinstance(fold, bool) or not 0 <= fold < n_folds:
                raise CorpusFormatError(line_no, f"fold must be an int in [0, {n_folds})")
            folds[fold].append(Document(id=doc_id, label=label, text=text))
    if all(not fold for fold in folds):
        raise CorpusFormatError(0, "corpus file contains no records")
    return FoldedCorpus(folds=folds, valid_fraction=valid_fraction)


def dump_documents_jsonl(docs: Iterable[Document], path: str | Path, fold: int) -> None:
    """Write documents as corpus-format JSONL, all tagged with the given fold."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            rec = {"id": doc.id, "label": doc.label, "text": doc.text, "fold": fold}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def make_split(corpus: FoldedCorpus, test_fold_index: int, seed: int,
               stratified: bool = False) -> SplitView:
    """Carve train/valid/test out of a folded corpus.

    The test set is the chosen fold verbatim. The validation set is
    round(valid_fraction * |non-test|) documents sampled uniformly (seeded)
    from the remaining folds; everything else is train. With stratified=True
    the validation sample is allocated per label proportionally.
    """
    if not 0 <= test_fold_index < corpus.n_folds:
        raise FoldIndexError(
            f"test fold {test_fold_index} outside [0, {corpus.n_folds})")
    test = tuple(corpus.folds[test_fold_index])
    rest: list[Document] = []
    for i, fold in enumerate(corpus.folds):
        if i != test_fold_index:
            rest.extend(fold)
    n_valid = round(corpus.valid_fraction * len(rest))
    rng = random.Random(seed)
    if not stratified or n_valid == 0:
        chosen = set(rng.sample(range(len(rest)), n_valid))
    else:
        chosen = _stratified_sample(rest, n_valid, rng)
    valid = tuple(rest[i] for i in sorted(chosen))
    train = tuple(doc for i, doc in enumerate(rest) if i not in chosen)
    return SplitView(train=train, valid=valid, test=test,
                     test_fold_index=test_fold_index, seed=seed)


def _stratified_sample(docs: Sequence[Document], n: int, rng: random.Random) -> set[int]:
    by_label: dict[str, list[int]] = defaultdict(list)
    for i, doc in enumerate(docs):
        by_label[doc.label].append(i)
    chosen: set[int] = set()
    labels = sorted(by_label)
    quotas = {label: int(n * len(by_label[label]) / len(docs)) for label in labels}
    for label in labels:
        take = min(quotas[label], len(by_label[label]))
        chosen.update(rng.sample(by_label[label], take))
    # distribute rounding leftovers deterministically
    leftovers = [i for label in labels for i in by_label[label] if i not in chosen]
    short = n - len(chosen)
    if short > 0:
        chosen.update(rng.sample(leftovers, short))
    return chosen


def upsample_balance(docs: Sequence[Document], seed: int) -> list[Document]:
    """Duplicate minority-class documents until every class matches the majority count.

    Each minority class gets whole passes over its documents first, then a
    remainder drawn in seeded shuffled order. The result (originals plus
    copies) is returned in seeded shuffled order. Deterministic per seed.
    """
    if not docs:
        raise EmptyCorpusError("cannot balance an empty document list")
    rng = random.Random(seed)
    by_label: dict[str, list[Document]] = defaultdict(list)
    for doc in docs:
        by_label[doc.label].append(doc)
    target = max(len(group) for group in by_label.values())
    out: list[Document] = list(docs)
    for label in sorted(by_label):
        group = by_label[label]
        deficit = target - len(group)
        if deficit == 0:
            continue
        passes, remainder = divmod(deficit, len(group))
        for _ in range(passes):
            out.extend(group)
        if remainder:
            pool = list(group)
            rng.shuffle(pool)
            out.extend(pool[:remainder])
    rng.shuffle(out)
    return out


@dataclass
class ConfusionCounts:
    """Per-class true-positive / false-positive / false-negative tallies."""

    tp: dict[str, int] = field(default_factory=dict)
    fp: dict[str, int] = field(default_factory=dict)
    fn: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_pairs(cls, y_true: Sequence[str], y_pred: Sequence[str],
                   classes: Iterable[str] | None = None) -> "ConfusionCounts":
        """Tally counts from parallel label sequences.

        Classes default to the union of observed true and predicted labels, so
        a true label the model can never predict still contributes (as pure
        false negatives) rather than erroring.
        """
        if len(y_true) != len(y_pred):
            raise ValueError("y_true and y_pred lengths differ")
        if classes is None:
            classes = set(y_true) | set(y_pred)
        counts = cls()
        for c in classes:
            counts.tp[c] = counts.fp[c] = counts.fn[c] = 0
        for t, p in zip(y_true, y_pred):
            if t == p:
                counts.tp[t] += 1
            else:
                counts.fn[t] = counts.fn.get(t, 0) + 1
                counts.fp[p] = counts.fp.get(p, 0) + 1
        return counts

    @property
    def classes(self) -> list[str]:
        return sorted(set(self.tp) | set(self.fp) | set(self.fn))


def f1_per_class(counts: ConfusionCounts) -> dict[str, float]:
    """F1 = 2TP / (2TP + FP + FN) per class; zero when the denominator is zero."""
    out: dict[str, float] = {}
    for c in counts.classes:
        tp = counts.tp.get(c, 0)
        denom = 2 * tp + counts.fp.get(c, 0) + counts.fn.get(c, 0)
        out[c] = (2 * tp / denom) if denom else 0.0
    return out


def macro_f1(counts: ConfusionCounts) -> float:
    """Unweighted mean of per-class F1 over all classes present in the counts."""
    scores = f1_per_class(counts)
    if not scores:
        raise EmptyCorpusError("no classes to score")
    return sum(scores.values()) / len(scores)


def micro_f1(counts: ConfusionCounts) -> float:
    """Micro-averaged F1 (pooled counts over all classes)."""
    tp = sum(counts.tp.values())
    denom = 2 * tp + sum(counts.fp.values()) + sum(counts.fn.values())
    return (2 * tp / denom) if denom else 0.0


def label_counts(docs: Iterable[Document]) -> Counter:
    return Counter(doc.label for doc in docs)
