"""Shared exception hierarchy.

The CLI maps these onto exit codes: DataError -> 2, TransportError and
ProviderError -> 3, StartupError and usage problems -> 1.
"""


class PeError(Exception):
    """Base class for all errors raised by this package."""


class DataError(PeError, ValueError):
    """Malformed or inconsistent input data (files, rows, offsets, joins)."""


class ParseError(PeError):
    """Model output could not be parsed; carries the raw text for retries."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class TransportError(PeError):
    """Network-level failure that persisted through all retries."""


class RateLimitError(TransportError):
    """Provider asked us to slow down; retried with backoff."""


class ProviderError(PeError):
    """Provider rejected the request (4xx); never retried."""


class StartupError(PeError):
    """A service or command could not start (bad config, occupied port)."""
