"""Append-only trial ledger.

Every training attempt leaves a row: RUNNING when it starts, then DONE with
per-epoch curves or FAILED with a reason. Rows are JSON lines with a strictly
increasing seq, flushed and fsynced so a crash can lose at most the row being
written. Search state is always reconstructed by replaying this file, which is
what makes interrupted sessions resumable.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DuplicateTrialError, LedgerCorruptError
from .grid import snap

ALL_FOLDS = "all"

STATUS_RUNNING = "RUNNING"
STATUS_DONE = "DONE"
STATUS_FAILED = "FAILED"
_STATUSES = {STATUS_RUNNING, STATUS_DONE, STATUS_FAILED}

TrialKey = tuple[str, int, object, str, int, int, str]


@dataclass(frozen=True)
class TrialRecord:
    seq: int
    lr: float
    batch_size: int
    epochs: int
    fold: object  # 0-based fold index, or "all" for a cross-fold average
    strategy: str
    budget: int
    seed: int
    backend_id: str
    status: str
    per_epoch_f1: tuple[float, ...] = ()
    per_epoch_valid_loss: tuple[float, ...] = ()
    reason: str | None = None
    wall_seconds: float | None = None

    def __post_init__(self) -> None:
        if self.status not in _STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.fold != ALL_FOLDS and not isinstance(self.fold, int):
            raise ValueError(f"fold must be an index or {ALL_FOLDS!r}")
        if self.status == STATUS_DONE and len(self.per_epoch_f1) != self.epochs:
            raise ValueError(
                f"DONE row needs {self.epochs} F1 values, got {len(self.per_epoch_f1)}")

    @property
    def key(self) -> TrialKey:
        """Trial identity. Epochs are deliberately excluded: a k-epoch run
        subsumes every shorter run of the same configuration."""
        return (snap(self.lr).label, self.batch_size, self.fold,
                self.strategy, self.budget, self.seed, self.backend_id)

    def f1_at(self, epoch: int) -> float:
        return self.per_epoch_f1[epoch - 1]

    def to_json(self) -> str:
        doc = {
            "seq": self.seq,
            "lr": self.lr,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "fold": self.fold,
            "strategy": self.strategy,
            "budget": self.budget,
            "seed": self.seed,
            "backend_id": self.backend_id,
            "status": self.status,
        }
        if self.per_epoch_f1:
            doc["per_epoch_f1"] = list(self.per_epoch_f1)
        if self.per_epoch_valid_loss:
            doc["per_epoch_valid_loss"] = list(self.per_epoch_valid_loss)
        if self.reason is not None:
            doc["reason"] = self.reason
        if self.wall_seconds is not None:
            doc["wall_seconds"] = self.wall_seconds
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str, line_no: int = 0) -> "TrialRecord":
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LedgerCorruptError(line_no, "invalid JSON") from exc
        if not isinstance(doc, dict):
            raise LedgerCorruptError(line_no, "not an object")
        try:
            fold = doc["fold"]
            if fold != ALL_FOLDS:
                fold = int(fold)
            return cls(
                seq=int(doc["seq"]),
                lr=float(doc["lr"]),
                batch_size=int(doc["batch_size"]),
                epochs=int(doc["epochs"]),
                fold=fold,
                strategy=str(doc["strategy"]),
                budget=int(doc["budget"]),
                seed=int(doc["seed"]),
                backend_id=str(doc["backend_id"]),
                status=str(doc["status"]),
                per_epoch_f1=tuple(float(x) for x in doc.get("per_epoch_f1", ())),
                per_epoch_valid_loss=tuple(
                    float(x) for x in doc.get("per_epoch_valid_loss", ())),
                reason=doc.get("reason"),
                wall_seconds=doc.get("wall_seconds"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise LedgerCorruptError(line_no, str(exc)) from exc


class Ledger:
    """The on-disk trial log plus an in-memory index over it.

    The index keeps, per trial identity, the DONE row with the most epochs
    (longer curves subsume shorter ones) and the count of FAILED attempts,
    which is how the retry policy survives process restarts.
    """

    def __init__(self, path: str | Path, fsync: bool = True) -> None:
        self.path = Path(path)
        self.fsync = fsync
        self._lock = threading.Lock()
        self._records: list[TrialRecord] = []
        self._done: dict[TrialKey, TrialRecord] = {}
        self._failures: dict[TrialKey, int] = {}
        self._next_seq = 1
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                record = TrialRecord.from_json(line, line_no)
                if record.seq < self._next_seq:
                    raise LedgerCorruptError(
                        line_no, f"seq {record.seq} not increasing")
                self._next_seq = record.seq + 1
                self._records.append(record)
                self._index(record)

    def _index(self, record: TrialRecord) -> None:
        if record.status == STATUS_DONE:
            current = self._done.get(record.key)
            if current is None or record.epochs > current.epochs:
                self._done[record.key] = record
        elif record.status == STATUS_FAILED:
            self._failures[record.key] = self._failures.get(record.key, 0) + 1

    # -- queries

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[TrialRecord]:
        return iter(list(self._records))

    @property
    def records(self) -> tuple[TrialRecord, ...]:
        return tuple(self._records)

    def done_rows(self) -> tuple[TrialRecord, ...]:
        return tuple(self._done.values())

    def find_done(self, key: TrialKey, min_epochs: int = 1) -> TrialRecord | None:
        record = self._done.get(key)
        if record is not None and record.epochs >= min_epochs:
            return record
        return None

    def failure_count(self, key: TrialKey) -> int:
        return self._failures.get(key, 0)

    # -- writes

    def append(self, record: TrialRecord) -> TrialRecord:
        """Assigns the next seq, writes the row durably, updates the index."""
        with self._lock:
            if record.status == STATUS_DONE:
                existing = self._done.get(record.key)
                if existing is not None and existing.epochs == record.epochs:
                    raise DuplicateTrialError(
                        f"trial {record.key} already DONE at {record.epochs} epochs")
            stamped = replace(record, seq=self._next_seq)
            self._next_seq += 1
            line = stamped.to_json()
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                if self.fsync:
                    os.fsync(fh.fileno())
            self._records.append(stamped)
            self._index(stamped)
            return stamped


def merge_indexable(records: Iterable[TrialRecord]) -> dict[TrialKey, TrialRecord]:
    """Best DONE row per identity, for callers holding plain record lists."""
    best: dict[TrialKey, TrialRecord] = {}
    for record in records:
        if record.status != STATUS_DONE:
            continue
        current = best.get(record.key)
        if current is None or record.epochs > current.epochs:
            best[record.key] = record
    return best
