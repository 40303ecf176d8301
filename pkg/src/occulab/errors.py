"""Exception types shared across the library.

The CLI maps these to exit codes: domain/configuration problems exit 2,
accuracy failures exit 3, partial results exit 4.
"""


class OcculabError(Exception):
    """Base class for all library-specific errors."""


class DomainError(OcculabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """Evaluation exactly on a pole (zero of a denominator)."""


class ConfigError(OcculabError, ValueError):
    """Invalid configuration object or option combination."""


class TruncationError(OcculabError, RuntimeError):
    """A series failed to meet its tolerance within the term budget."""


class AccuracyError(OcculabError, RuntimeError):
    """Two independent numerical routes disagree beyond tolerance."""

    def __init__(self, message, values=None):
        super().__init__(message)
        # values holds the disagreeing results, e.g. {"gaver_stehfest": x, ...}
        self.values = dict(values) if values else {}


class PartialResultError(OcculabError, RuntimeError):
    """An operation hit a hard cap; carries whatever was produced."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
