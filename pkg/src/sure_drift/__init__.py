"""Drift estimation for Gaussian processes by SURE-tuned thresholding."""

from __future__ import annotations

from typing import Any

from .config import Config  # re-export for convenience

__all__ = ["Config", "cli", "create_server"]


def __getattr__(name: str) -> Any:
    """Lazily expose the command line and server entry points on first access."""

    if name == "cli":
        from .main import cli as command

        return command
    if name == "create_server":
        from .server import create_server as factory

        return factory
    raise AttributeError(name)
