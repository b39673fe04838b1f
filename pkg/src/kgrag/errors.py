"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class KgragError(Exception):
    """Base class for all engine errors."""


class ContractViolation(KgragError):
    """An operation was called with arguments that break its contract."""


class IngestionError(KgragError):
    """A document could not be read into the corpus."""


class EncodingError(IngestionError):
    """Input bytes are not valid UTF-8."""


class NotFoundError(KgragError):
    """A referenced entity, triple, or node does not exist."""


class ConfigurationError(KgragError):
    """The engine is missing state required for the requested operation."""


class ProviderError(KgragError):
    """A remote embedding or LLM provider failed."""

    def __init__(self, message: str, status: int | None = None, retries: int = 0):
        super().__init__(message)
        self.status = status
        self.retries = retries


class ExtractionPipelineError(KgragError):
    """Too many per-chunk extraction failures to trust the run."""
