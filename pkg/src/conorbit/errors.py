"""Exception types shared across the package."""

from __future__ import annotations


class ConorbitError(Exception):
    """Base class for all package errors."""


class DomainError(ConorbitError, ValueError):
    """A point lies outside the chart domain of a model.

    ``index`` is the node (or sample) index that failed, when known.
    """

    def __init__(self, message: str, index: int | None = None, point=None):
        super().__init__(message)
        self.index = index
        self.point = point


class UnsupportedOperation(ConorbitError):
    """The requested operation is not defined for this model or boundary."""


class NumericalFailure(ConorbitError):
    """An inner numerical procedure failed to converge."""


class BracketError(ConorbitError):
    """Lower and upper certificates of a critical value are inconsistent."""

    def __init__(self, message: str, lower=None, upper=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class ChainViolation(ConorbitError):
    """The ordering of critical values was violated by computed enclosures."""


class ConfigError(ConorbitError):
    """Invalid scenario configuration. ``key`` is the offending dotted key path."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
