"""Run configuration for the adapter executable."""

from dataclasses import dataclass


class AdapterError(Exception):
    """Configuration or table problem that prevents serving."""


MODES = ("stub", "finetune")


@dataclass(frozen=True)
class AdapterConfig:
    mode: str
    table: str | None = None
    model: str | None = None
    device: str | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise AdapterError(
                f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.mode == "stub" and not self.table:
            raise AdapterError("stub mode requires --table")
