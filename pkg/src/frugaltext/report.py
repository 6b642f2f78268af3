"""Markdown rendering of search progress and results.

Two shapes: a per-batch-size grid (learning rates across, epoch counts down,
best cell per row in bold) and a flat conclusions table (strategy, token
budget, batch size, rate, epochs, F1). Scores are shown as percentages with
two decimals.
"""

from __future__ import annotations

from .grid import snap
from .hpo import (
    PHASE_PROPAGATE,
    SearchState,
    TrialContext,
    select_best,
)
from .ledger import ALL_FOLDS, STATUS_DONE, TrialRecord


def _pct(value: float) -> str:
    return f"{100 * value:.2f}"


def render_status(state: SearchState) -> str:
    phase = state.phase
    if phase == PHASE_PROPAGATE and state.propagate_epoch is not None:
        phase = f"{PHASE_PROPAGATE}(e={state.propagate_epoch})"
    total = state.trials_done + state.trials_failed
    lines = [f"phase {phase}, {total} trial{'' if total == 1 else 's'}"]
    if state.current_bs is not None:
        lines.append(f"current batch size: {state.current_bs}")
    if state.trials_failed:
        lines.append(f"failed attempts: {state.trials_failed}")
    for pending in state.frontier:
        bs = "?" if pending.batch_size is None else pending.batch_size
        lines.append(
            f"next: lr {pending.lr.label} bs {bs} fold {pending.fold} "
            f"x{pending.epochs} epochs ({pending.tag})")
    for bs, picks in state.conclusions.items():
        parts = [f"e{e} {point.label} ({_pct(avg)})"
                 for e, (point, avg) in sorted(picks.items())]
        lines.append(f"BS={bs}: " + ", ".join(parts))
    return "\n".join(lines)


def _all_rows(ledger, context: TrialContext | None) -> list[TrialRecord]:
    best: dict[tuple, TrialRecord] = {}
    for row in ledger.records if hasattr(ledger, "records") else ledger:
        if row.status != STATUS_DONE or row.fold != ALL_FOLDS:
            continue
        if context is not None and not context.matches(row):
            continue
        cur = best.get(row.key)
        if cur is None or row.epochs > cur.epochs:
            best[row.key] = row
    return list(best.values())


def render_search_report(ledger, *, context: TrialContext | None = None,
                         max_epochs: int | None = None) -> str:
    """The full result document: one grid per batch size plus conclusions."""
    rows = _all_rows(ledger, context)
    by_bs: dict[int, list[TrialRecord]] = {}
    for row in rows:
        by_bs.setdefault(row.batch_size, []).append(row)

    out: list[str] = ["# Learning-rate search", ""]
    if not by_bs:
        out.append("No all-fold averages recorded yet.")
        return "\n".join(out) + "\n"

    for bs in sorted(by_bs, reverse=True):
        group = sorted(by_bs[bs], key=lambda r: snap(r.lr).index)
        labels = [snap(r.lr).label for r in group]
        depth = max(len(r.per_epoch_f1) for r in group)
        if max_epochs is not None:
            depth = min(depth, max_epochs)
        out.append(f"## BS={bs}")
        out.append("")
        out.append("| Epoch | " + " | ".join(labels) + " |")
        out.append("|" + " --- |" * (len(labels) + 1))
        for e in range(1, depth + 1):
            values = [r.per_epoch_f1[e - 1] if len(r.per_epoch_f1) >= e else None
                      for r in group]
            present = [v for v in values if v is not None]
            best = max(present) if present else None
            cells = []
            marked = False
            for value in values:
                if value is None:
                    cells.append("-")
                elif value == best and not marked:
                    cells.append(f"**{_pct(value)}**")
                    marked = True
                else:
                    cells.append(_pct(value))
            out.append(f"| {e} | " + " | ".join(cells) + " |")
        out.append("")

    out.append("## Conclusions")
    out.append("")
    out.append("| Strategy | Tokens | BS | LR | Epochs | F1 |")
    out.append("|" + " --- |" * 6)
    for bs in sorted(by_bs, reverse=True):
        picks = select_best(ledger, bs, context=context, max_epochs=max_epochs)
        sample = by_bs[bs][0]
        for e, (point, avg) in sorted(picks.items()):
            out.append(
                f"| {sample.strategy} | {sample.budget} | {bs} "
                f"| {point.label} | {e} | {_pct(avg)} |")
    out.append("")
    return "\n".join(out)
