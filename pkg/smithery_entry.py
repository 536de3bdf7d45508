"""Smithery entrypoint that makes the src layout importable."""
from __future__ import annotations

import importlib
import sys
from pathlib import Path
from typing import Any


def _ensure_repo_on_path() -> None:
    project_root = Path(__file__).resolve().parent
    source_root = project_root / "src"
    if source_root.is_dir() and str(source_root) not in sys.path:
        sys.path.insert(0, str(source_root))


def create_server(*args: Any, **kwargs: Any) -> Any:
    """Proxy to the sure_drift server factory used by Smithery."""
    try:
        server_module = importlib.import_module("sure_drift.server")
    except ModuleNotFoundError:
        _ensure_repo_on_path()
        server_module = importlib.import_module("sure_drift.server")
    return server_module.create_server(*args, **kwargs)
