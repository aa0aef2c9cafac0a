"""
Error Types
Exception hierarchy shared by the pricers, the hedging stack and the CLI
"""
from typing import Optional


class HedgerError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(HedgerError, ValueError):
    """Invalid model, grid or network parameters."""


class DomainError(HedgerError, ValueError):
    """Query outside the domain a model was built for (e.g. t > T)."""


class DataError(HedgerError, ValueError):
    """Input data that cannot be used (missing dates, bad values)."""


class FormatError(DataError):
    """Malformed file: missing columns, non-monotone dates, duplicates."""


class RowError(DataError):
    """A single unparsable or invalid row in an input file."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class LookupFailure(HedgerError, LookupError):
    """Unknown symbol, option or checkpoint."""


class ConfigurationError(HedgerError, ValueError):
    """Experiment wiring is inconsistent (e.g. a boundary is required but missing)."""


class SourceError(HedgerError, RuntimeError):
    """A path source ran out of paths."""
