"""Propagation search over learning rate, batch size, and epoch count.

The search runs in phases, each a pure function of the trial ledger:

  SEED        one trial at (lr0, largest feasible BS, max epochs) on one fold
  DIRECTION   classify the seed curve, probe a decade ladder of nearby LRs
  RANGE       evaluate the best probe peaks on all folds
  PROPAGATE   per epoch count e = max..1, hill-climb the LR grid on all-fold
              averages; a direction stops at the first non-improving neighbor
  BS_DESCENT  halve the batch size, reseed each epoch at the previous best,
              climb again with the upward direction closed by default
  DONE        batch size floor reached

Every training attempt is appended to the ledger before the next starts, so
a session can stop (budget, crash, kill) at any point and a later session
re-derives the phase it was in and continues. No configuration is ever
trained twice for values a longer recorded curve already provides.
"""

from __future__ import annotations

import queue
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import (
    BackendError,
    ConfigError,
    InsufficientEvidenceError,
    ResourceError,
    SessionBudgetExhausted,
    UnavailableTrialError,
)
from .grid import LrGridPoint, as_fraction, snap
from .ledger import ALL_FOLDS, STATUS_DONE, STATUS_FAILED, STATUS_RUNNING, Ledger, TrialRecord
from .shorten import Strategy, TokenBudget
from .trainer import Hyperparams

BS_LADDER = (512, 256, 128, 64, 32, 16)

PHASE_SEED = "SEED"
PHASE_DIRECTION = "DIRECTION"
PHASE_RANGE = "RANGE"
PHASE_PROPAGATE = "PROPAGATE"
PHASE_BS_DESCENT = "BS_DESCENT"
PHASE_DONE = "DONE"


class Direction(Enum):
    TOO_HIGH = "too-high"
    TOO_LOW = "too-low"
    IN_RANGE = "in-range"


@dataclass(frozen=True)
class SearchConfig:
    lr0: float = 5e-5
    initial_bs: int | None = None
    max_epochs: int = 3
    probe_multipliers: tuple[Fraction, ...] = (
        Fraction(1, 5), Fraction(1, 10), Fraction(1, 50))
    probe_fold: int = 1
    n_folds: int = 5
    drop_threshold: float = 0.005
    rise_threshold: float = 0.010
    candidate_margin: float = 0.005
    max_candidates: int = 2
    min_bs: int = 16
    bs_ladder: tuple[int, ...] = BS_LADDER
    strategy: Strategy = Strategy.A1
    budget: TokenBudget = field(default_factory=lambda: TokenBudget(128))
    seed: int = 0
    max_widenings: int = 8
    max_seed_slides: int = 12
    workers: int = 1

    def __post_init__(self) -> None:
        if self.lr0 <= 0:
            raise ConfigError("lr0 must be positive")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be at least 1")
        if self.n_folds < 1:
            raise ConfigError("n_folds must be at least 1")
        if not 0 <= self.probe_fold < self.n_folds:
            raise ConfigError("probe_fold must be a valid fold index")
        if min(self.drop_threshold, self.rise_threshold, self.candidate_margin) < 0:
            raise ConfigError("thresholds must be nonnegative")
        if any(m >= 1 for m in self.probe_multipliers):
            raise ConfigError("probe multipliers must be < 1")
        if self.max_candidates < 1:
            raise ConfigError("max_candidates must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @property
    def lr0_point(self) -> LrGridPoint:
        return snap(self.lr0)


@dataclass(frozen=True)
class PendingTrial:
    """One unit of outstanding work, for status display."""

    lr: LrGridPoint
    batch_size: int | None
    fold: int
    epochs: int
    tag: str


@dataclass(frozen=True)
class SearchState:
    phase: str
    propagate_epoch: int | None
    current_bs: int | None
    frontier: tuple[PendingTrial, ...]
    conclusions: dict[int, dict[int, tuple[LrGridPoint, float]]]
    trials_done: int
    trials_failed: int


@dataclass(frozen=True)
class SessionReport:
    state: SearchState
    trials_run: int
    exhausted: bool


# ---------------------------------------------------------------------------
# decision functions (pure)


def classify_direction(trial, cfg: SearchConfig) -> Direction:
    """Reads a per-epoch F1 curve and says which way the learning rate is off.

    A drop between consecutive epochs beyond drop_threshold means the rate is
    too high (the model overshoots after its first pass). A strictly rising
    curve that still gains more than rise_threshold on its last epoch means
    training is not finished, so the rate is too low. Everything else is in
    range. Accepts a trial record or a bare curve.
    """
    curve = tuple(getattr(trial, "per_epoch_f1", trial))
    if len(curve) < 2:
        raise InsufficientEvidenceError(
            "direction needs at least two epochs of F1 history")
    if any(curve[i] - curve[i + 1] > cfg.drop_threshold for i in range(len(curve) - 1)):
        return Direction.TOO_HIGH
    rising = all(curve[i + 1] > curve[i] for i in range(len(curve) - 1))
    if rising and curve[-1] - curve[-2] > cfg.rise_threshold:
        return Direction.TOO_LOW
    return Direction.IN_RANGE


def _as_curve(probe) -> tuple[float, ...]:
    return tuple(getattr(probe, "per_epoch_f1", probe))


def pick_candidates(probes: Mapping[LrGridPoint, object], cfg: SearchConfig,
                    allow_fallback: bool = False) -> list[LrGridPoint]:
    """Chooses which probed rates deserve a full all-fold evaluation.

    Eligible probes are those not classified TOO_LOW; among them, every probe
    whose single-fold peak F1 is within candidate_margin of the best peak is
    kept, at most max_candidates, ordered by descending peak with ties toward
    the lower rate.

    If no probe is IN_RANGE the neighborhood has not been found yet and the
    caller should widen the ladder; that is signaled as an
    InsufficientEvidenceError unless allow_fallback is set, in which case the
    best peaks seen so far are used anyway.
    """
    if not probes:
        raise InsufficientEvidenceError("no probe trials to pick from")
    curves = {point: _as_curve(trial) for point, trial in probes.items()}
    directions = {point: classify_direction(curve, cfg) if len(curve) >= 2
                  else Direction.IN_RANGE
                  for point, curve in curves.items()}
    if not allow_fallback and Direction.IN_RANGE not in directions.values():
        raise InsufficientEvidenceError(
            "every probe is too high or too low; widen the ladder")
    eligible = [p for p, d in directions.items() if d is not Direction.TOO_LOW]
    if not eligible:
        eligible = list(curves)
    peaks = {p: max(curves[p]) for p in eligible}
    best = max(peaks.values())
    kept = [p for p in eligible if best - peaks[p] <= cfg.candidate_margin]
    kept.sort(key=lambda p: (-peaks[p], p.index))
    return kept[:cfg.max_candidates]


def probe_batch_size(backend, sizes: Sequence[int] = BS_LADDER) -> int:
    """Finds the largest batch size the backend accepts, probing downward."""
    for size in sorted(sizes, reverse=True):
        if backend.ping(size):
            return size
    raise ResourceError(f"no feasible batch size among {sorted(sizes)}")


def probe_ladder(cfg: SearchConfig, direction: Direction,
                 extra_steps: int = 0) -> list[LrGridPoint]:
    """Grid points to probe around lr0, in probe order.

    Multipliers are applied to lr0 exactly (rational arithmetic), inverted
    when the seed was TOO_LOW, then snapped to the grid. extra_steps extends
    the ladder by continuing the multiplier pattern (alternating factors 2
    and 5), which is how widening proceeds after an unproductive first pass.
    """
    base = as_fraction(cfg.lr0)
    multipliers = list(cfg.probe_multipliers)
    factor_cycle = (Fraction(1, 2), Fraction(1, 5))
    for i in range(extra_steps):
        multipliers.append(multipliers[-1] * factor_cycle[i % 2])
    points: list[LrGridPoint] = []
    seen = {snap(cfg.lr0).label}
    for mult in multipliers:
        if direction is Direction.TOO_LOW:
            mult = 1 / mult
        point = snap(base * mult)
        if point.label not in seen:
            seen.add(point.label)
            points.append(point)
    return points


def select_best(ledger, bs: int, *, context: "TrialContext | None" = None,
                max_epochs: int | None = None) -> dict[int, tuple[LrGridPoint, float]]:
    """Per epoch count, the rate with the best all-fold average at this batch
    size, with ties toward the lower rate. Pure read of the ledger.

    All-fold rows are authoritative. Only when none exist at all does this
    fall back to averaging whatever single-fold rows are present, so that a
    ledger holding one trial still reports that trial's rate.
    """
    rows = [r for r in _done_rows(ledger)
            if r.batch_size == bs and (context is None or context.matches(r))]
    all_rows = _dedupe_longest([r for r in rows if r.fold == ALL_FOLDS])
    if all_rows:
        per_lr = {r.key[0]: r for r in all_rows}
    else:
        per_lr = _fold_means(_dedupe_longest([r for r in rows if r.fold != ALL_FOLDS]))
    if not per_lr:
        return {}
    horizon = max(len(r.per_epoch_f1) for r in per_lr.values())
    if max_epochs is not None:
        horizon = min(horizon, max_epochs)
    best: dict[int, tuple[LrGridPoint, float]] = {}
    for e in range(1, horizon + 1):
        entries = [(snap(r.lr), r.per_epoch_f1[e - 1])
                   for r in per_lr.values() if len(r.per_epoch_f1) >= e]
        if not entries:
            continue
        entries.sort(key=lambda pv: (-pv[1], pv[0].index))
        best[e] = entries[0]
    return best


def _done_rows(ledger) -> list[TrialRecord]:
    if isinstance(ledger, Ledger):
        return [r for r in ledger.records if r.status == STATUS_DONE]
    return [r for r in ledger if r.status == STATUS_DONE]


def _dedupe_longest(rows: Sequence[TrialRecord]) -> list[TrialRecord]:
    best: dict[tuple, TrialRecord] = {}
    for row in rows:
        cur = best.get(row.key)
        if cur is None or row.epochs > cur.epochs:
            best[row.key] = row
    return list(best.values())


def _fold_means(rows: Sequence[TrialRecord]) -> dict[str, TrialRecord]:
    """Synthesizes average rows from single-fold rows, label-keyed."""
    by_lr: dict[str, list[TrialRecord]] = {}
    for row in rows:
        by_lr.setdefault(row.key[0], []).append(row)
    out: dict[str, TrialRecord] = {}
    for label, group in by_lr.items():
        depth = min(len(r.per_epoch_f1) for r in group)
        curve = tuple(
            sum(r.per_epoch_f1[e] for r in group) / len(group) for e in range(depth))
        template = group[0]
        out[label] = TrialRecord(
            seq=0, lr=template.lr, batch_size=template.batch_size, epochs=depth,
            fold=ALL_FOLDS, strategy=template.strategy, budget=template.budget,
            seed=template.seed, backend_id=template.backend_id,
            status=STATUS_DONE, per_epoch_f1=curve)
    return out


@dataclass(frozen=True)
class TrialContext:
    """The non-(lr, bs, fold) half of a trial's identity."""

    strategy: str
    budget: int
    seed: int
    backend_id: str

    @classmethod
    def of(cls, cfg: SearchConfig, backend_id: str) -> "TrialContext":
        return cls(cfg.strategy.value, cfg.budget.max_tokens, cfg.seed, backend_id)

    def matches(self, row: TrialRecord) -> bool:
        return (row.strategy == self.strategy and row.budget == self.budget
                and row.seed == self.seed and row.backend_id == self.backend_id)

    def key(self, lr: LrGridPoint, bs: int, fold) -> tuple:
        return (lr.label, bs, fold, self.strategy, self.budget, self.seed,
                self.backend_id)


# ---------------------------------------------------------------------------
# session engine


class _PlanHalt(Exception):
    """Raised by a read-only pass when the next step needs a real trial."""

    def __init__(self, pending: PendingTrial) -> None:
        super().__init__(f"next trial needed: {pending}")
        self.pending = pending


class _Session:
    """One engine pass over the phases, executing or merely planning.

    In execute mode, missing trials run on the backend and everything is
    appended to the ledger before use. In plan mode nothing runs and nothing
    is written; the first missing trial halts the pass, which is how the
    current phase and frontier are reconstructed from a cold ledger.
    """

    def __init__(self, cfg: SearchConfig, ledger: Ledger, backend=None,
                 backend_id: str | None = None, deterministic: bool = True,
                 max_trials: int | None = None,
                 max_seconds: float | None = None) -> None:
        self.cfg = cfg
        self.ledger = ledger
        self.backend = backend
        self.execute = backend is not None
        if backend is not None:
            backend_id = backend.backend_id
            deterministic = backend.deterministic
        if backend_id is None:
            raise ConfigError("planning needs a backend id to match ledger rows")
        self.context = TrialContext.of(cfg, backend_id)
        self.attempts_allowed = 1 if deterministic else 2
        self.max_trials = max_trials
        self.max_seconds = max_seconds
        self.started = time.monotonic()
        self.trials_run = 0
        self.phase = PHASE_SEED
        self.propagate_epoch: int | None = None
        self.current_bs: int | None = None
        self.frontier: tuple[PendingTrial, ...] = ()
        self.exhausted = False
        # average curves derived but not yet persisted (plan mode only)
        self._overlay: dict[tuple[str, int], tuple[float, ...]] = {}
        self._clones: list | None = None

    # -- budget

    def _charge(self) -> None:
        if self.max_trials is not None and self.trials_run >= self.max_trials:
            raise SessionBudgetExhausted(
                f"session trial budget of {self.max_trials} used up")
        if (self.max_seconds is not None
                and time.monotonic() - self.started >= self.max_seconds):
            raise SessionBudgetExhausted(
                f"session wall-clock budget of {self.max_seconds:.0f}s used up")
        self.trials_run += 1

    # -- trial acquisition

    def _record(self, lr: LrGridPoint, bs: int, fold, epochs: int, status: str,
                f1=(), loss=(), reason=None, wall=None) -> TrialRecord:
        return TrialRecord(
            seq=0, lr=lr.value, batch_size=bs, epochs=epochs, fold=fold,
            strategy=self.context.strategy, budget=self.context.budget,
            seed=self.context.seed, backend_id=self.context.backend_id,
            status=status, per_epoch_f1=tuple(f1), per_epoch_valid_loss=tuple(loss),
            reason=reason, wall_seconds=wall)

    def ensure_fold_trial(self, lr: LrGridPoint, bs: int, fold: int, epochs: int,
                          tag: str) -> TrialRecord:
        """Returns a DONE row covering at least `epochs`, training if needed."""
        key = self.context.key(lr, bs, fold)
        while True:
            row = self.ledger.find_done(key, epochs)
            if row is not None:
                return row
            if self.ledger.failure_count(key) >= self.attempts_allowed:
                raise UnavailableTrialError(
                    f"trial {key} failed its {self.attempts_allowed} allowed "
                    f"attempt(s)", key)
            if not self.execute:
                raise _PlanHalt(PendingTrial(lr, bs, fold, epochs, tag))
            self._charge()
            self.ledger.append(self._record(lr, bs, fold, epochs, STATUS_RUNNING))
            hp = Hyperparams(lr=lr.value, batch_size=bs, epochs=epochs,
                             seed=self.cfg.seed, budget=self.cfg.budget,
                             strategy=self.cfg.strategy)
            t0 = time.perf_counter()
            try:
                results = self.backend.run_trial(hp, fold)
            except BackendError as exc:
                self.ledger.append(self._record(
                    lr, bs, fold, epochs, STATUS_FAILED, reason=exc.reason,
                    wall=time.perf_counter() - t0))
                continue
            self.ledger.append(self._record(
                lr, bs, fold, epochs, STATUS_DONE,
                f1=[r.f1_test for r in results],
                loss=[r.valid_loss for r in results],
                wall=time.perf_counter() - t0))

    def _fold_rows(self, lr: LrGridPoint, bs: int, epochs: int,
                   tag: str) -> list[TrialRecord]:
        folds = list(range(self.cfg.n_folds))
        if self.cfg.workers <= 1 or not self.execute:
            return [self.ensure_fold_trial(lr, bs, f, epochs, tag) for f in folds]
        return self._fold_rows_parallel(lr, bs, folds, epochs, tag)

    def _fold_rows_parallel(self, lr, bs, folds, epochs, tag) -> list[TrialRecord]:
        missing = [f for f in folds
                   if self.ledger.find_done(self.context.key(lr, bs, f), epochs) is None]
        if missing:
            if self._clones is None:
                self._clones = [self.backend.clone_for_worker()
                                for _ in range(self.cfg.workers)]
            idle: queue.Queue = queue.Queue()
            for clone in self._clones:
                idle.put(clone)
            charge_lock = threading.Lock()

            def work(fold: int) -> None:
                clone = idle.get()
                try:
                    self._worker_attempt(clone, charge_lock, lr, bs, fold, epochs)
                finally:
                    idle.put(clone)

            with ThreadPoolExecutor(max_workers=self.cfg.workers) as executor:
                errors = [exc for exc in
                          (fut.exception() for fut in
                           [executor.submit(work, f) for f in missing])
                          if exc is not None]
            for exc in errors:
                if isinstance(exc, SessionBudgetExhausted):
                    raise exc
            for exc in errors:
                raise exc
        return [self.ensure_fold_trial(lr, bs, f, epochs, tag) for f in folds]

    def _worker_attempt(self, clone, charge_lock, lr, bs, fold, epochs) -> None:
        key = self.context.key(lr, bs, fold)
        while True:
            if self.ledger.find_done(key, epochs) is not None:
                return
            if self.ledger.failure_count(key) >= self.attempts_allowed:
                raise UnavailableTrialError(f"trial {key} exhausted retries", key)
            with charge_lock:
                self._charge()
            self.ledger.append(self._record(lr, bs, fold, epochs, STATUS_RUNNING))
            hp = Hyperparams(lr=lr.value, batch_size=bs, epochs=epochs,
                             seed=self.cfg.seed, budget=self.cfg.budget,
                             strategy=self.cfg.strategy)
            t0 = time.perf_counter()
            try:
                results = clone.run_trial(hp, fold)
            except BackendError as exc:
                self.ledger.append(self._record(
                    lr, bs, fold, epochs, STATUS_FAILED, reason=exc.reason,
                    wall=time.perf_counter() - t0))
                continue
            self.ledger.append(self._record(
                lr, bs, fold, epochs, STATUS_DONE,
                f1=[r.f1_test for r in results],
                loss=[r.valid_loss for r in results],
                wall=time.perf_counter() - t0))
            return

    # -- all-fold averages

    def ensure_avg(self, lr: LrGridPoint, bs: int, epochs: int, tag: str) -> float:
        """All-fold average F1 at epoch `epochs`, running folds as needed.

        The derived average is persisted as a row with fold="all" unless one
        covering this epoch count already exists. Partial averages are never
        produced: every fold must be DONE first.
        """
        all_key = self.context.key(lr, bs, ALL_FOLDS)
        row = self.ledger.find_done(all_key, epochs)
        if row is not None:
            return row.f1_at(epochs)
        overlay = self._overlay.get((lr.label, bs))
        if overlay is not None and len(overlay) >= epochs:
            return overlay[epochs - 1]
        fold_rows = self._fold_rows(lr, bs, epochs, tag)
        depth = min(len(r.per_epoch_f1) for r in fold_rows)
        curve = tuple(
            sum(r.per_epoch_f1[e] for r in fold_rows) / len(fold_rows)
            for e in range(depth))
        loss = tuple(
            sum(r.per_epoch_valid_loss[e] for r in fold_rows) / len(fold_rows)
            if all(len(r.per_epoch_valid_loss) > e for r in fold_rows) else 0.0
            for e in range(depth))
        if self.execute:
            self.ledger.append(self._record(
                lr, bs, ALL_FOLDS, depth, STATUS_DONE, f1=curve, loss=loss))
        else:
            self._overlay[(lr.label, bs)] = curve
        return curve[epochs - 1]

    def known_avg(self, lr: LrGridPoint, bs: int, epochs: int) -> float | None:
        """Ledgered all-fold average at this epoch count, or None. Never runs."""
        row = self.ledger.find_done(self.context.key(lr, bs, ALL_FOLDS), epochs)
        if row is not None:
            return row.f1_at(epochs)
        overlay = self._overlay.get((lr.label, bs))
        if overlay is not None and len(overlay) >= epochs:
            return overlay[epochs - 1]
        return None

    # -- phases

    def run(self) -> SearchState:
        try:
            bs0 = self._resolve_bs()
            self.current_bs = bs0
            self.phase = PHASE_SEED
            seed_row = self.ensure_fold_trial(
                self.cfg.lr0_point, bs0, self.cfg.probe_fold, self.cfg.max_epochs,
                "seed")
            self.phase = PHASE_DIRECTION
            candidates = self._phase_direction(bs0, seed_row)
            self.phase = PHASE_RANGE
            for point in candidates:
                self.ensure_avg(point, bs0, self.cfg.max_epochs, "candidate")
            self.phase = PHASE_PROPAGATE
            self._phase_propagate(bs0)
            self.phase = PHASE_BS_DESCENT
            self.propagate_epoch = None
            self._phase_descent(bs0)
            self.phase = PHASE_DONE
            self.current_bs = None
        except SessionBudgetExhausted:
            self.exhausted = True
        except _PlanHalt as halt:
            self.frontier = (halt.pending,)
        return self.state()

    def _resolve_bs(self) -> int:
        if self.cfg.initial_bs is not None:
            return self.cfg.initial_bs
        seed_label = self.cfg.lr0_point.label
        for row in self.ledger.records:
            if (row.fold == self.cfg.probe_fold
                    and row.epochs == self.cfg.max_epochs
                    and snap(row.lr).label == seed_label
                    and self.context.matches(row)):
                return row.batch_size
        if not self.execute:
            raise _PlanHalt(PendingTrial(
                self.cfg.lr0_point, None, self.cfg.probe_fold,
                self.cfg.max_epochs, "seed"))
        return probe_batch_size(self.backend, self.cfg.bs_ladder)

    def _phase_direction(self, bs0: int, seed_row: TrialRecord) -> list[LrGridPoint]:
        probes: dict[LrGridPoint, TrialRecord] = {self.cfg.lr0_point: seed_row}
        if self.cfg.max_epochs < 2:
            return [self.cfg.lr0_point]
        direction = classify_direction(seed_row, self.cfg)
        if direction is Direction.IN_RANGE:
            # nothing to correct; the hill climb will map the neighborhood
            return [self.cfg.lr0_point]
        widening = 0
        while True:
            ladder = probe_ladder(self.cfg, direction, extra_steps=widening)
            for point in ladder:
                if point in probes:
                    continue
                try:
                    probes[point] = self.ensure_fold_trial(
                        point, bs0, self.cfg.probe_fold, self.cfg.max_epochs,
                        "probe")
                except UnavailableTrialError:
                    continue
            try:
                return pick_candidates(probes, self.cfg)
            except InsufficientEvidenceError:
                if widening >= self.cfg.max_widenings:
                    return pick_candidates(probes, self.cfg, allow_fallback=True)
                widening += 1

    def _phase_propagate(self, bs: int) -> None:
        for e in range(self.cfg.max_epochs, 0, -1):
            self.propagate_epoch = e
            start = self._argmax_known(bs, e)
            if start is None:
                raise InsufficientEvidenceError(
                    f"no all-fold averages at bs={bs} to start epoch-{e} "
                    f"propagation from")
            self._climb(start, bs, e, up_open=True, tag=f"e{e}")

    def _phase_descent(self, bs0: int) -> None:
        bs = bs0
        while True:
            next_bs = bs // 2
            if next_bs <= self.cfg.min_bs:
                return
            self.current_bs = next_bs
            previous = select_best(self.ledger, bs, context=self.context,
                                   max_epochs=self.cfg.max_epochs)
            for e in range(self.cfg.max_epochs, 0, -1):
                self.propagate_epoch = e
                if e not in previous:
                    continue
                seed_point = previous[e][0]
                placed = self._place_descent_seed(seed_point, next_bs, e)
                if placed is None:
                    continue
                self._climb(placed, next_bs, e, up_open=False, tag=f"e{e}")
            bs = next_bs

    def _place_descent_seed(self, point: LrGridPoint, bs: int,
                            e: int) -> LrGridPoint | None:
        """Seeds an epoch's climb at the previous batch size's best rate.

        A smaller batch means more steps per epoch, so the matching rate is
        the same or lower; when the seed itself is permanently unrunnable the
        engine slides one grid step down and tries again.
        """
        for _ in range(self.cfg.max_seed_slides + 1):
            try:
                self.ensure_avg(point, bs, e, "descent-seed")
                return point
            except UnavailableTrialError:
                point = point.predecessor()
        return None

    def _climb(self, start: LrGridPoint, bs: int, e: int, up_open: bool,
               tag: str) -> tuple[LrGridPoint, float]:
        start_val = self.ensure_avg(start, bs, e, tag)
        best_point, best_val = start, start_val
        cur = start
        while True:
            nxt = cur.predecessor()
            try:
                val = self.ensure_avg(nxt, bs, e, tag + "-lower")
            except UnavailableTrialError:
                break
            if val > best_val:
                best_point, best_val, cur = nxt, val, nxt
            else:
                break
        if not up_open:
            above = self.known_avg(start.successor(), bs, e)
            up_open = above is not None and above > start_val
        if up_open:
            cur = start
            while True:
                nxt = cur.successor()
                try:
                    val = self.ensure_avg(nxt, bs, e, tag + "-higher")
                except UnavailableTrialError:
                    break
                if val > best_val:
                    best_point, best_val, cur = nxt, val, nxt
                else:
                    break
        return best_point, best_val

    def _argmax_known(self, bs: int, e: int) -> LrGridPoint | None:
        best_point, best_val = None, None
        for row in self.ledger.done_rows():
            if (row.fold != ALL_FOLDS or row.batch_size != bs
                    or row.epochs < e or not self.context.matches(row)):
                continue
            point, val = snap(row.lr), row.f1_at(e)
            if (best_val is None or val > best_val
                    or (val == best_val and point.index < best_point.index)):
                best_point, best_val = point, val
        for (label, row_bs), curve in self._overlay.items():
            if row_bs != bs or len(curve) < e:
                continue
            point, val = snap(_label_value(label)), curve[e - 1]
            if (best_val is None or val > best_val
                    or (val == best_val and point.index < best_point.index)):
                best_point, best_val = point, val
        return best_point

    # -- state assembly

    def state(self) -> SearchState:
        done = failed = 0
        seen_bs = set()
        for row in self.ledger.records:
            if row.fold == ALL_FOLDS:
                seen_bs.add(row.batch_size)
                continue
            if row.status == STATUS_DONE:
                done += 1
                seen_bs.add(row.batch_size)
            elif row.status == STATUS_FAILED:
                failed += 1
        conclusions = {}
        for bs in sorted(seen_bs, reverse=True):
            picks = select_best(self.ledger, bs, context=self.context,
                                max_epochs=self.cfg.max_epochs)
            if picks:
                conclusions[bs] = picks
        return SearchState(
            phase=self.phase,
            propagate_epoch=self.propagate_epoch,
            current_bs=self.current_bs,
            frontier=self.frontier,
            conclusions=conclusions,
            trials_done=done,
            trials_failed=failed,
        )


def _label_value(label: str) -> float:
    mantissa, _, exponent = label.partition("e")
    return float(f"{mantissa}e{exponent}")


# ---------------------------------------------------------------------------
# public entry points


def seed_trial(cfg: SearchConfig, backend, ledger: Ledger) -> TrialRecord:
    """Runs (or fetches) the opening trial at lr0 on the probe fold."""
    session = _Session(cfg, ledger, backend=backend)
    bs0 = session._resolve_bs()
    return session.ensure_fold_trial(
        cfg.lr0_point, bs0, cfg.probe_fold, cfg.max_epochs, "seed")


def evaluate_all_folds(lr, bs: int, epochs: int, backend, ledger: Ledger,
                       cfg: SearchConfig) -> tuple[float, ...]:
    """All-fold average curve for one configuration, running missing folds."""
    session = _Session(cfg, ledger, backend=backend)
    point = lr if isinstance(lr, LrGridPoint) else snap(lr)
    session.ensure_avg(point, bs, epochs, "evaluate")
    row = ledger.find_done(session.context.key(point, bs, ALL_FOLDS), epochs)
    return row.per_epoch_f1[:epochs]


def propagate(epoch_target: int, start, ledger: Ledger, backend,
              cfg: SearchConfig, bs: int,
              up_open: bool = True) -> tuple[LrGridPoint, float]:
    """One hill climb at a fixed epoch count; returns (best rate, average)."""
    session = _Session(cfg, ledger, backend=backend)
    point = start if isinstance(start, LrGridPoint) else snap(start)
    return session._climb(point, bs, epoch_target, up_open, f"e{epoch_target}")


def session_run(cfg: SearchConfig, backend, ledger: Ledger, *,
                max_trials: int | None = None,
                max_seconds: float | None = None) -> SessionReport:
    """Advances the search until DONE or the session budget runs out.

    State is rebuilt from the ledger on entry, so interrupting a session and
    calling this again continues exactly where the ledger left off.
    """
    session = _Session(cfg, ledger, backend=backend,
                       max_trials=max_trials, max_seconds=max_seconds)
    state = session.run()
    return SessionReport(state=state, trials_run=session.trials_run,
                         exhausted=session.exhausted)


def reconstruct_state(cfg: SearchConfig, ledger: Ledger, backend_id: str,
                      deterministic: bool = True) -> SearchState:
    """Read-only replay of the phase machine; never trains, never writes."""
    session = _Session(cfg, ledger, backend_id=backend_id,
                       deterministic=deterministic)
    return session.run()
