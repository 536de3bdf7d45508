"""Error hierarchy shared by the library, the CLI and the tool server."""

from __future__ import annotations

from typing import Mapping, Optional, Sequence, Union

Messages = Mapping[str, Union[str, Sequence[str]]]


class SureError(Exception):
    """Base class for every error raised by :mod:`sure_drift`."""


class ValidationError(SureError, ValueError):
    """Invalid constructor input.

    ``messages`` maps the offending field to a list of human readable
    problems, so callers can report every issue at once.
    """

    def __init__(self, messages: Optional[Messages] = None):
        if messages is None:
            messages = {}
        self.messages = {
            key: [value] if isinstance(value, str) else list(value)
            for key, value in messages.items()
        }
        super().__init__(self._render())

    def _render(self) -> str:
        parts = [
            f"{key}: {'; '.join(problems)}" for key, problems in self.messages.items()
        ]
        return ", ".join(parts) or "validation failed"


class DomainError(SureError, ValueError):
    """Argument outside the domain of an operation."""


class NumericError(SureError, ArithmeticError):
    """A numerical routine failed to converge or produced non-finite output."""


class ConfigError(SureError):
    """A scenario file or environment setting could not be used."""


class StorageError(SureError, OSError):
    """Reading or writing a result file failed."""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{message} (path: {path})" if path else message)
