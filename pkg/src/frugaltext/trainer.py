"""The built-in trainer: hashed bag-of-subwords softmax regression.

This is the desk-scale stand-in for a GPU fine-tuning run. It consumes the
same knobs (lr, batch size, epochs, seed, token budget, strategy), reports
the same per-epoch numbers (test macro-F1, validation cross-entropy), and is
bit-identical across runs with the same seed, which is what the search engine
and its tests need from it.

Pipeline per document: whitespace clean, word tokenize, shortening strategy,
budget truncation, then hashing each subword into a fixed-dimension count
vector (L2-normalized). The classifier is multinomial logistic regression
trained with mini-batch AdamW.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
from scipy import sparse

from .corpus import ConfusionCounts, SplitView, clean_whitespace, macro_f1
from .errors import ConfigError, EmptyCorpusError
from .optim import AdamW, OptimizerConfig
from .shorten import Strategy, StopwordList, TokenBudget, shorten_and_truncate
from .tokenizer import SubwordVocab, word_tokenize

DEFAULT_FEATURE_DIM = 2 ** 18
DEFAULT_MAX_EPOCHS = 3
_LOSS_FLOOR = 1e-12


@dataclass(frozen=True)
class Hyperparams:
    """One trial's training knobs."""

    lr: float
    batch_size: int
    epochs: int
    seed: int = 0
    budget: TokenBudget = field(default_factory=lambda: TokenBudget(128))
    strategy: Strategy = Strategy.A1

    def __post_init__(self) -> None:
        if not self.lr > 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")


@dataclass(frozen=True)
class EpochResult:
    """What a backend reports after each training epoch."""

    epoch: int
    f1_test: float
    valid_loss: float


@runtime_checkable
class TrainerBackend(Protocol):
    """Anything that can run one (hyperparams, fold) trial to completion."""

    backend_id: str
    deterministic: bool

    def run_trial(self, hp: Hyperparams, fold: int) -> list[EpochResult]:
        """Train and return one EpochResult per epoch, in order."""
        ...

    def ping(self, batch_size: int) -> bool:
        """Cheap feasibility check for a batch size (memory probe stand-in)."""
        ...

    def clone_for_worker(self) -> "TrainerBackend":
        """An instance safe to drive from another worker thread."""
        ...


def _hash_token(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % dim


class _FeatureHasher:
    """Token-to-bucket hashing with a per-instance memo (hash once per token)."""

    def __init__(self, dim: int) -> None:
        self.dim = dim
        self._memo: dict[str, int] = {}

    def bucket(self, token: str) -> int:
        idx = self._memo.get(token)
        if idx is None:
            idx = _hash_token(token, self.dim)
            self._memo[token] = idx
        return idx


def featurize(texts: Sequence[str], strategy: Strategy, budget: TokenBudget,
              vocab: SubwordVocab, stopwords: StopwordList | None,
              dim: int = DEFAULT_FEATURE_DIM,
              hasher: _FeatureHasher | None = None) -> sparse.csr_matrix:
    """Encode texts as L2-normalized hashed subword-count rows."""
    hasher = hasher or _FeatureHasher(dim)
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for text in texts:
        words = word_tokenize(clean_whitespace(text))
        subwords = shorten_and_truncate(words, strategy, budget, vocab, stopwords)
        counts: dict[int, float] = {}
        for token in subwords:
            b = hasher.bucket(token)
            counts[b] = counts.get(b, 0.0) + 1.0
        if counts:
            norm = float(np.sqrt(sum(c * c for c in counts.values())))
            for b in sorted(counts):
                indices.append(b)
                data.append(counts[b] / norm)
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(texts), dim),
    )


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _logits(W: np.ndarray, b: np.ndarray, X) -> np.ndarray:
    return np.asarray(X @ W) + b


def softmax_cross_entropy(W: np.ndarray, b: np.ndarray, X, y: np.ndarray) -> float:
    """Mean cross-entropy of the softmax classifier on (X, integer labels y)."""
    probs = _softmax(_logits(W, b, X))
    picked = probs[np.arange(len(y)), y]
    return float(-np.log(np.maximum(picked, _LOSS_FLOOR)).mean())


def softmax_cross_entropy_grads(W: np.ndarray, b: np.ndarray, X,
                                y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of softmax_cross_entropy w.r.t. W and b."""
    n = X.shape[0]
    delta = _softmax(_logits(W, b, X))
    delta[np.arange(n), y] -= 1.0
    delta /= n
    dW = np.asarray(X.T @ delta)
    db = delta.sum(axis=0)
    return dW, db


def train_builtin(split: SplitView, hp: Hyperparams, cfg: OptimizerConfig,
                  vocab: SubwordVocab, stopwords: StopwordList | None = None,
                  feature_dim: int = DEFAULT_FEATURE_DIM) -> list[EpochResult]:
    """Train the hashed-feature classifier on a split; one EpochResult per epoch.

    Mini-batches are drawn in a seeded shuffle each epoch; the final short
    batch is kept. Fully deterministic for a given seed. Documents whose test
    label never occurs in training are scored as wrong (they cannot be
    predicted); such labels in the validation set contribute the clipped
    worst-case loss.
    """
    if not split.train:
        raise EmptyCorpusError("training split is empty")
    classes = sorted({doc.label for doc in split.train})
    class_index = {c: i for i, c in enumerate(classes)}
    n_classes = len(classes)

    hasher = _FeatureHasher(feature_dim)

    def encode(docs):
        X = featurize([d.text for d in docs], hp.strategy, hp.budget, vocab,
                      stopwords, feature_dim, hasher)
        y = np.asarray([class_index.get(d.label, -1) for d in docs])
        return X, y, [d.label for d in docs]

    X_train, y_train, _ = encode(split.train)
    X_valid, y_valid, _ = encode(split.valid)
    X_test, y_test, test_labels = encode(split.test)
    if np.any(y_train < 0):
        raise EmptyCorpusError("internal error: train label missing from class set")

    W = np.zeros((feature_dim, n_classes))
    b = np.zeros(n_classes)
    opt = AdamW([W.shape, b.shape], lr=hp.lr, cfg=cfg)
    rng = np.random.default_rng(hp.seed)
    n = X_train.shape[0]

    results: list[EpochResult] = []
    for epoch in range(1, hp.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, hp.batch_size):
            batch = order[start:start + hp.batch_size]
            Xb = X_train[batch]
            yb = y_train[batch]
            dW, db = softmax_cross_entropy_grads(W, b, Xb, yb)
            W, b = opt.step([W, b], [dW, db])
        f1 = _macro_f1_on(W, b, X_test, test_labels, classes)
        loss = _valid_loss(W, b, X_valid, y_valid)
        results.append(EpochResult(epoch=epoch, f1_test=f1, valid_loss=loss))
    return results


def _macro_f1_on(W: np.ndarray, b: np.ndarray, X, y_true: list[str],
                 classes: list[str]) -> float:
    if X.shape[0] == 0:
        return 0.0
    pred_idx = _logits(W, b, X).argmax(axis=1)
    y_pred = [classes[i] for i in pred_idx]
    # a test label unseen in training forms its own all-miss class
    counts = ConfusionCounts.from_pairs(y_true, y_pred)
    return macro_f1(counts)


def _valid_loss(W: np.ndarray, b: np.ndarray, X, y: np.ndarray) -> float:
    if X.shape[0] == 0:
        return 0.0
    probs = _softmax(_logits(W, b, X))
    known = y >= 0
    picked = np.where(known, probs[np.arange(len(y)), np.maximum(y, 0)], 0.0)
    return float(-np.log(np.maximum(picked, _LOSS_FLOOR)).mean())
