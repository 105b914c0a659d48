"""Exception hierarchy for AFC memory simulation."""

from __future__ import annotations


class AFCError(Exception):
    """Base class for all errors raised by afcmemory."""


class DomainError(AFCError, ValueError):
    """An input lies outside the domain an operation is defined on."""


class ConfigError(AFCError, ValueError):
    """A configuration document could not be loaded or validated."""


class ResolutionError(AFCError):
    """A grid, bandwidth or horizon is too coarse or too short."""


class FitError(AFCError):
    """A least-squares fit could not be performed or did not converge."""


class SpectrumFormatError(DomainError):
    """A spectrum or table file is malformed."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
