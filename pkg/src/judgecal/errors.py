"""Exception hierarchy shared across the package."""
from __future__ import annotations

__all__ = [
    "JudgecalError",
    "ConfigError",
    "DataError",
    "BackendError",
    "TemplateError",
    "UnparseableScoreError",
]


class JudgecalError(Exception):
    """Base class for every categorized failure raised by this package."""

    category = "internal"
    exit_code = 5


class ConfigError(JudgecalError):
    """Bad or missing configuration: files, flags, manifests, templates."""

    category = "config"
    exit_code = 2


class DataError(JudgecalError):
    """Golden-set, label, or prediction data violates the ingestion contract."""

    category = "data"
    exit_code = 3


class BackendError(JudgecalError):
    """A generation backend failed after exhausting its retry budget."""

    category = "backend"
    exit_code = 4


class TemplateError(ConfigError):
    """A prompt template or its bindings are malformed."""


class UnparseableScoreError(DataError):
    """No in-range score could be parsed from a completion.

    Carries the offending completion so callers can disclose it verbatim.
    """

    def __init__(self, message: str, raw: str) -> None:
        super().__init__(message)
        self.raw = raw
