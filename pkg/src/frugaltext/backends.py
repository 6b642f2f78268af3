"""Trainer backends: built-in, recorded-fixture replay, and external process.

External trainers speak newline-delimited JSON over stdin/stdout. One request:

    {"cmd": "train", "train": PATH, "valid": PATH, "test": PATH,
     "lr": REAL, "batch_size": INT, "epochs": INT, "seed": INT,
     "max_tokens": INT, "strategy": STR}

The child replies with one line per epoch,

    {"epoch": INT, "f1_test": REAL, "valid_loss": REAL}

followed by {"done": true}. Any {"error": STR} line aborts the trial. A
process serves requests sequentially; parallelism means more processes.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import FoldedCorpus, make_split, upsample_balance
from .errors import (
    BackendExitError,
    ConfigError,
    FixtureMissError,
    ProtocolError,
    TrialTimeoutError,
)
from .grid import snap
from .optim import OptimizerConfig
from .shorten import StopwordList
from .tokenizer import SubwordVocab
from .trainer import (
    DEFAULT_FEATURE_DIM,
    EpochResult,
    Hyperparams,
    train_builtin,
)

DEFAULT_TRIAL_TIMEOUT_S = 6 * 3600.0


# ---------------------------------------------------------------------------
# fixture backend


@dataclass(frozen=True)
class FixtureEntry:
    lr: float
    batch_size: int
    fold: int
    f1: tuple[float, ...]
    valid_loss: tuple[float, ...]
    seed: int | None = None


class FixtureTable:
    """A recorded-trial table: per-epoch F1 curves keyed by (lr, batch_size, fold).

    A k-epoch entry serves any request for at most k epochs (prefix reuse).
    Learning rates are compared as grid points, so 5e-06 and 5.0000000000001e-06
    hit the same row.
    """

    def __init__(self, entries: Sequence[FixtureEntry], name: str = "table") -> None:
        self.name = name
        self._rows: dict[tuple[str, int, int], FixtureEntry] = {}
        for entry in entries:
            key = (snap(entry.lr).label, entry.batch_size, entry.fold)
            if key in self._rows:
                raise ConfigError(f"fixture has duplicate entry for {key}")
            self._rows[key] = entry
        self._batch_sizes = {e.batch_size for e in entries}

    def __len__(self) -> int:
        return len(self._rows)

    @property
    def batch_sizes(self) -> set[int]:
        return set(self._batch_sizes)

    def lookup(self, lr: float, batch_size: int, fold: int, epochs: int) -> FixtureEntry:
        key = (snap(lr).label, batch_size, fold)
        entry = self._rows.get(key)
        if entry is None:
            raise FixtureMissError(
                f"no recorded trial for lr={key[0]} bs={batch_size} fold={fold}")
        if len(entry.f1) < epochs:
            raise FixtureMissError(
                f"recorded trial for lr={key[0]} bs={batch_size} fold={fold} "
                f"has {len(entry.f1)} epochs, {epochs} requested")
        return entry

    @classmethod
    def from_dict(cls, payload: dict, name: str | None = None) -> "FixtureTable":
        entries = []
        for i, row in enumerate(payload.get("trials", [])):
            try:
                f1 = tuple(float(x) for x in row["f1"])
                loss = tuple(float(x) for x in row.get("valid_loss", [0.0] * len(f1)))
                entries.append(FixtureEntry(
                    lr=float(row["lr"]),
                    batch_size=int(row["batch_size"]),
                    fold=int(row.get("fold", 0)),
                    f1=f1,
                    valid_loss=loss,
                    seed=row.get("seed"),
                ))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"fixture trial #{i} is malformed: {exc}") from exc
        return cls(entries, name=name or payload.get("name", "table"))

    @classmethod
    def from_file(cls, path: str | Path) -> "FixtureTable":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls.from_dict(payload, name=Path(path).stem)


class FixtureBackend:
    """Replays recorded trials instead of training; used for tests and audits."""

    deterministic = True

    def __init__(self, table: FixtureTable) -> None:
        self.table = table
        self.backend_id = f"fixture:{table.name}"

    def run_trial(self, hp: Hyperparams, fold: int) -> list[EpochResult]:
        entry = self.table.lookup(hp.lr, hp.batch_size, fold, hp.epochs)
        return [
            EpochResult(epoch=i + 1, f1_test=entry.f1[i], valid_loss=entry.valid_loss[i])
            for i in range(hp.epochs)
        ]

    def ping(self, batch_size: int) -> bool:
        return batch_size in self.table.batch_sizes

    def clone_for_worker(self) -> "FixtureBackend":
        return self


# ---------------------------------------------------------------------------
# built-in backend


class BuiltinBackend:
    """Runs the hashed bag-of-subwords trainer on a folded corpus."""

    deterministic = True

    def __init__(self, corpus: FoldedCorpus, vocab: SubwordVocab,
                 stopwords: StopwordList | None = None, data_seed: int = 0,
                 upsample: bool = True,
                 optimizer: OptimizerConfig = OptimizerConfig(),
                 feature_dim: int = DEFAULT_FEATURE_DIM) -> None:
        self.corpus = corpus
        self.vocab = vocab
        self.stopwords = stopwords
        self.data_seed = data_seed
        self.upsample = upsample
        self.optimizer = optimizer
        self.feature_dim = feature_dim
        variant = "up" if upsample else "raw"
        self.backend_id = f"builtin:{variant}:s{data_seed}"
        self._split_cache: dict[int, object] = {}

    def _split_for(self, fold: int):
        split = self._split_cache.get(fold)
        if split is None:
            split = make_split(self.corpus, fold, self.data_seed)
            if self.upsample:
                balanced = tuple(upsample_balance(list(split.train), self.data_seed))
                split = type(split)(train=balanced, valid=split.valid, test=split.test,
                                    test_fold_index=split.test_fold_index, seed=split.seed)
            self._split_cache[fold] = split
        return split

    def run_trial(self, hp: Hyperparams, fold: int) -> list[EpochResult]:
        split = self._split_for(fold)
        return train_builtin(split, hp, self.optimizer, self.vocab,
                             self.stopwords, self.feature_dim)

    def ping(self, batch_size: int) -> bool:
        return True

    def clone_for_worker(self) -> "BuiltinBackend":
        return self


# ---------------------------------------------------------------------------
# external backend (wire protocol client)


@dataclass(frozen=True)
class SplitPaths:
    train: str
    valid: str
    test: str


class ExternalBackend:
    """Drives an external trainer process over the NDJSON wire protocol.

    The child is started lazily and kept alive across trials; any protocol
    breach, timeout or early exit kills it, and the next trial starts a fresh
    process. One instance talks to one child, so workers must clone.
    """

    def __init__(self, command: str | Sequence[str],
                 split_paths: Mapping[int, SplitPaths],
                 timeout_s: float = DEFAULT_TRIAL_TIMEOUT_S,
                 deterministic: bool = False,
                 backend_id: str | None = None) -> None:
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise ConfigError("external backend command is empty")
        self.split_paths = dict(split_paths)
        self.timeout_s = timeout_s
        self.deterministic = deterministic
        self.backend_id = backend_id or f"exec:{Path(self.command[0]).name}"
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue | None = None

    # -- process management

    def _start(self) -> None:
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._lines = queue.Queue()
        thread = threading.Thread(
            target=_pump_lines, args=(self._proc.stdout, self._lines), daemon=True)
        thread.start()

    def close(self) -> None:
        if self._proc is not None:
            try:
                if self._proc.stdin:
                    self._proc.stdin.close()
                self._proc.terminate()
                self._proc.wait(timeout=5)
            except Exception:
                self._proc.kill()
            self._proc = None
            self._lines = None

    def __enter__(self) -> "ExternalBackend":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- trial execution

    def run_trial(self, hp: Hyperparams, fold: int) -> list[EpochResult]:
        paths = self.split_paths.get(fold)
        if paths is None:
            raise ConfigError(f"no split files configured for fold {fold}")
        request = {
            "cmd": "train",
            "train": paths.train,
            "valid": paths.valid,
            "test": paths.test,
            "lr": hp.lr,
            "batch_size": hp.batch_size,
            "epochs": hp.epochs,
            "seed": hp.seed,
            "max_tokens": hp.budget.max_tokens,
            "strategy": hp.strategy.value,
        }
        try:
            return self._exchange(request, hp.epochs)
        except Exception:
            self.close()
            raise

    def _exchange(self, request: dict, epochs: int) -> list[EpochResult]:
        if self._proc is None or self._proc.poll() is not None:
            self.close()
            self._start()
        assert self._proc is not None and self._proc.stdin is not None
        deadline = time.monotonic() + self.timeout_s
        try:
            self._proc.stdin.write(json.dumps(request) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BackendExitError(f"trainer process is gone: {exc}") from exc

        results: list[EpochResult] = []
        while True:
            line = self._next_line(deadline)
            try:
                reply = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ProtocolError(f"unparseable reply line: {line!r}") from exc
            if not isinstance(reply, dict):
                raise ProtocolError(f"reply is not an object: {line!r}")
            if "error" in reply:
                raise ProtocolError(f"trainer reported: {reply['error']}")
            if reply.get("done"):
                if len(results) != epochs:
                    raise ProtocolError(
                        f"done after {len(results)} epochs, expected {epochs}")
                return results
            try:
                epoch = int(reply["epoch"])
                f1 = float(reply["f1_test"])
                loss = float(reply["valid_loss"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ProtocolError(f"bad epoch line: {line!r}") from exc
            if epoch != len(results) + 1:
                raise ProtocolError(
                    f"epoch {epoch} out of order (expected {len(results) + 1})")
            if epoch > epochs:
                raise ProtocolError(f"epoch {epoch} beyond requested {epochs}")
            results.append(EpochResult(epoch=epoch, f1_test=f1, valid_loss=loss))

    def _next_line(self, deadline: float) -> str:
        assert self._lines is not None and self._proc is not None
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TrialTimeoutError(
                    f"no reply within {self.timeout_s:.0f}s, killing trainer")
            try:
                item = self._lines.get(timeout=min(remaining, 0.5))
            except queue.Empty:
                if self._proc.poll() is not None and self._lines.empty():
                    raise BackendExitError(
                        f"trainer exited with code {self._proc.returncode} mid-trial")
                continue
            if item is None:  # EOF
                code = self._proc.wait()
                raise BackendExitError(
                    f"trainer closed its output (exit code {code}) mid-trial")
            return item

    def ping(self, batch_size: int) -> bool:
        # the wire protocol has no feasibility message; infeasible sizes
        # surface as failed trials instead
        return True

    def clone_for_worker(self) -> "ExternalBackend":
        return ExternalBackend(self.command, self.split_paths, self.timeout_s,
                               self.deterministic, self.backend_id)


def _pump_lines(stream, out: queue.Queue) -> None:
    for line in stream:
        out.put(line.rstrip("\n"))
    out.put(None)


# ---------------------------------------------------------------------------
# backend spec parsing


def parse_backend_spec(spec: str, *, fixture_resolver=None, builtin_factory=None,
                       external_factory=None):
    """Build a backend from a CLI-style spec string.

    Accepted forms: "builtin", "fixture:<file-or-alias>", "exec:<command>".
    The factories supply the context (corpus, split files) each kind needs.
    """
    if spec == "builtin":
        if builtin_factory is None:
            raise ConfigError("builtin backend needs --corpus and --vocab")
        return builtin_factory()
    if spec.startswith("fixture:"):
        ref = spec[len("fixture:"):]
        if not ref:
            raise ConfigError("fixture backend needs a file path")
        if fixture_resolver is not None:
            table = fixture_resolver(ref)
        else:
            table = FixtureTable.from_file(ref)
        return FixtureBackend(table)
    if spec.startswith("exec:"):
        command = spec[len("exec:"):]
        if not command.strip():
            raise ConfigError("exec backend needs a command")
        if external_factory is None:
            raise ConfigError("exec backend needs prepared split files (--out)")
        return external_factory(command)
    raise ConfigError(
        f"unknown backend spec {spec!r} (expected builtin, fixture:<file>, exec:<command>)")
