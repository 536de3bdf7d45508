"""Discretized sample paths."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from ..exceptions import ValidationError
from .drift import DriftFunction

ArrayLike = Union[Sequence[float], np.ndarray]


@dataclass(frozen=True)
class PathMeta:
    model_id: str = ""
    seed: Optional[int] = None
    method: str = ""
    drift: Optional[DriftFunction] = None
    note: str = ""


def _frozen(values: ArrayLike) -> np.ndarray:
    array = np.array(values, dtype=float).ravel()
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SamplePath:
    """Observed values on a strictly increasing time grid."""

    grid: np.ndarray
    values: np.ndarray
    meta: PathMeta = field(default_factory=PathMeta)

    def __post_init__(self) -> None:
        grid = _frozen(self.grid)
        values = _frozen(self.values)
        problems = {}
        if grid.size == 0:
            problems["grid"] = "must contain at least one time"
        elif np.any(np.diff(grid) <= 0) or grid[0] < 0 or not np.all(np.isfinite(grid)):
            problems["grid"] = "must be finite, strictly increasing and start at t >= 0"
        if values.size != grid.size:
            problems["values"] = "need one value per grid time"
        elif not np.all(np.isfinite(values)):
            problems["values"] = "must be finite"
        if problems:
            raise ValidationError(problems)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.grid.size

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    @property
    def duration(self) -> float:
        return float(self.grid[-1] - self.grid[0])

    @property
    def drift_values(self) -> Optional[np.ndarray]:
        """True drift on the grid when the path was simulated."""
        if self.meta.drift is None:
            return None
        return self.meta.drift(self.grid)

    def with_values(self, values: ArrayLike, note: str = "") -> "SamplePath":
        return SamplePath(self.grid, values, replace(self.meta, note=note or self.meta.note))
