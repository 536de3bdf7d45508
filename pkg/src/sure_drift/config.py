"""Application configuration utilities."""
import os
from pathlib import Path
from typing import Optional, Union

import yaml
from pydantic import ValidationError as PydanticValidationError

from .exceptions import ConfigError
from .models.scenario import ScenarioConfig

MAX_SEED = 2**64 - 1


def _str_to_int(name: str, value: Optional[str], default: Optional[int]) -> Optional[int]:
    """Parse an integer environment value.

    Args:
        name: Environment variable name, used in error messages.
        value: The raw string value, ``None`` when unset.
        default: The fallback when ``value`` is ``None`` or blank.

    Returns:
        The parsed integer or ``default``.

    Raises:
        ConfigError: When ``value`` is not an integer.
    """
    if value is None or not value.strip():
        return default

    try:
        return int(value.strip())
    except ValueError as exc:
        raise ConfigError(f"{name} must be an integer, got {value!r}") from exc


class Config:
    """Environment-level settings shared by the CLI and the tool server."""

    def __init__(self) -> None:
        self.APP_LOG_LEVEL = os.getenv("APP_LOG_LEVEL", "INFO").upper()
        self.SURE_SEED = _str_to_int("SURE_SEED", os.getenv("SURE_SEED"), None)
        self.SURE_OUT = os.getenv("SURE_OUT") or None
        self.SURE_WORKERS = _str_to_int("SURE_WORKERS", os.getenv("SURE_WORKERS"), 1)


def get_config() -> Config:
    """Return a :class:`Config` built from the current environment.

    Invalid values fail fast with :class:`ConfigError` instead of silently
    falling back, since a mistyped seed would change every result file.
    """

    config = Config()

    if config.SURE_SEED is not None and not 0 <= config.SURE_SEED <= MAX_SEED:
        raise ConfigError("SURE_SEED must be an unsigned 64-bit integer")

    if config.SURE_WORKERS is None or config.SURE_WORKERS < 1:
        raise ConfigError("SURE_WORKERS must be a positive integer")

    return config


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    """Read and validate a YAML scenario file."""

    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"scenario file {path} is not valid YAML: {exc}") from exc

    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"scenario file {path} must contain a mapping at the top level")

    try:
        return ScenarioConfig.model_validate(raw)
    except PydanticValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}"
            for error in exc.errors()
        )
        raise ConfigError(f"invalid scenario file {path}: {problems}") from exc
