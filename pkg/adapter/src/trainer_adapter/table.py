"""Lookup table of recorded training curves for stub mode."""

import json
from dataclasses import dataclass
from pathlib import Path

from .config import AdapterError


@dataclass(frozen=True)
class TableRow:
    lr: float
    batch_size: int
    f1: tuple[float, ...]
    valid_loss: tuple[float, ...]
    seed: int | None = None


class StubTable:
    """Recorded per-epoch curves keyed by (lr, batch_size) and optional seed.

    A row that names a seed answers only requests carrying that seed; a row
    without one answers any seed, with the seed-specific row winning when
    both exist. Requests for fewer epochs than a row holds are served from
    the curve prefix. Rows may carry extra markers such as "fold" (other
    tools use them); the stub ignores those, so two rows that collide on
    (lr, batch_size, seed) are rejected at load time.
    """

    def __init__(self, rows) -> None:
        self._rows: dict[tuple[float, int, int | None], TableRow] = {}
        for row in rows:
            key = (row.lr, row.batch_size, row.seed)
            if key in self._rows:
                raise AdapterError(
                    f"duplicate table entry for lr={row.lr} "
                    f"batch_size={row.batch_size}")
            self._rows[key] = row

    @classmethod
    def load(cls, path: str | Path) -> "StubTable":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise AdapterError(f"cannot read table file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise AdapterError(f"table file is not valid JSON: {exc}") from None
        if not isinstance(raw, dict) or not isinstance(raw.get("trials"), list):
            raise AdapterError('table file must be an object with a "trials" list')
        return cls(_parse_row(entry, i) for i, entry in enumerate(raw["trials"]))

    def lookup(self, lr: float, batch_size: int, epochs: int,
               seed: int) -> tuple[tuple[float, ...], tuple[float, ...]] | None:
        row = (self._rows.get((lr, batch_size, seed))
               or self._rows.get((lr, batch_size, None)))
        if row is None or len(row.f1) < epochs:
            return None
        return row.f1[:epochs], row.valid_loss[:epochs]

    def __len__(self) -> int:
        return len(self._rows)


def _parse_row(entry, index: int) -> TableRow:
    def fail(why: str):
        raise AdapterError(f"table entry {index} is malformed: {why}")

    if not isinstance(entry, dict):
        fail("not an object")
    lr = entry.get("lr")
    bs = entry.get("batch_size")
    f1 = entry.get("f1")
    if not _is_number(lr) or lr <= 0:
        fail("lr must be a positive number")
    if not isinstance(bs, int) or isinstance(bs, bool) or bs < 1:
        fail("batch_size must be a positive integer")
    if not _is_curve(f1) or not f1:
        fail("f1 must be a non-empty list of numbers")
    loss = entry.get("valid_loss", [0.0] * len(f1))
    if not _is_curve(loss) or len(loss) != len(f1):
        fail("valid_loss must match f1 in length")
    seed = entry.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        fail("seed must be an integer")
    return TableRow(lr=float(lr), batch_size=bs,
                    f1=tuple(float(x) for x in f1),
                    valid_loss=tuple(float(x) for x in loss), seed=seed)


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_curve(values) -> bool:
    return isinstance(values, list) and all(_is_number(x) for x in values)
