"""Exception hierarchy shared by all pipeline stages.

Each class maps to a distinct CLI exit code so callers can tell apart
bad configuration, unmet stage dependencies, backend failures and
unparseable model output.
"""

from __future__ import annotations


class ClipLineError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(ClipLineError, ValueError):
    """A caller-supplied value violates a documented precondition."""


class ConfigError(ClipLineError):
    """Run configuration is missing, malformed or self-contradictory."""


class DependencyError(ClipLineError):
    """A stage was asked to run before the stage that produces its input."""

    def __init__(self, message: str, producing_stage: str | None = None):
        super().__init__(message)
        self.producing_stage = producing_stage


class BackendError(ClipLineError):
    """A model endpoint returned a non-retryable failure."""

    def __init__(self, message: str, status: int | None = None, body: str | None = None):
        super().__init__(message)
        self.status = status
        # keep only an excerpt: bodies can be huge and are for diagnostics only
        self.body = (body or "")[:2000]


class TransportError(BackendError):
    """All retries were exhausted without reaching the backend."""


class ParseError(ClipLineError):
    """Structured text (subtitles, screenplay, model output) could not be parsed."""

    def __init__(self, message: str, line: int | None = None, raw: str | None = None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line
        self.raw = raw


# Exit codes used by the command line driver.
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DEPENDENCY = 3
EXIT_BACKEND = 4
EXIT_PARSE = 5


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code documented in the README."""
    if isinstance(exc, (ConfigError, InvalidArgumentError)):
        return EXIT_CONFIG
    if isinstance(exc, DependencyError):
        return EXIT_DEPENDENCY
    if isinstance(exc, BackendError):
        return EXIT_BACKEND
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    return EXIT_FAILURE
