"""Exception hierarchy for the frugaltext toolkit.

The CLI maps these onto exit codes: configuration/usage problems exit 1,
data problems exit 2, backend problems exit 3.
"""

from __future__ import annotations


class FrugaltextError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(FrugaltextError):
    """A run was configured inconsistently (missing stopwords, bad flag combo)."""


class CorpusError(FrugaltextError):
    """Base class for corpus data problems."""


class CorpusFormatError(CorpusError):
    """A corpus file line failed validation; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EmptyCorpusError(CorpusError):
    """An operation that needs documents was handed none."""


class FoldIndexError(CorpusError):
    """A fold index outside the corpus's fold range was requested."""


class DegenerateCorpusError(CorpusError):
    """The corpus has no words at all, so token statistics are undefined."""


class VocabError(FrugaltextError):
    """A subword vocabulary violates its invariants (empty, duplicates, no UNK)."""


class LedgerError(FrugaltextError):
    """Base class for trial-ledger problems."""


class LedgerCorruptError(LedgerError):
    """A ledger line failed to parse or validate; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"ledger line {line_no}: {message}")
        self.line_no = line_no


class DuplicateTrialError(LedgerError):
    """A completed trial with an identical key was appended twice."""


class BackendError(FrugaltextError):
    """Base class for trainer-backend failures."""

    #: short machine-readable tag recorded in FAILED ledger rows
    reason = "backend"


class FixtureMissError(BackendError):
    """The engine requested a trial the fixture table does not contain."""

    reason = "fixture-miss"


class ProtocolError(BackendError):
    """An external trainer broke the wire protocol (bad line, bad ordering)."""

    reason = "protocol"


class TrialTimeoutError(BackendError):
    """An external trainer exceeded its wall-clock allowance."""

    reason = "timeout"


class BackendExitError(BackendError):
    """An external trainer exited nonzero before finishing the reply."""

    reason = "exit"


class ResourceError(BackendError):
    """No feasible batch size (or similar resource exhaustion)."""

    reason = "resource"


class SearchError(FrugaltextError):
    """Base class for search-engine misuse."""


class InsufficientEvidenceError(SearchError):
    """The ledger holds too little data to take the requested step (for
    example a direction classification on a one-epoch curve, or a candidate
    pick where every probe failed)."""


class UnavailableTrialError(SearchError):
    """A trial is permanently unrunnable: its retry allowance is spent.

    For deterministic backends that is one failed attempt; retrying a
    deterministic failure can only fail the same way.
    """

    def __init__(self, message: str, key: object = None) -> None:
        super().__init__(message)
        self.key = key


class SessionBudgetExhausted(FrugaltextError):
    """The per-invocation trial or wall-clock budget ran out (clean stop)."""
