"""Deterministic drift functions u(t) and centering functions alpha(t)."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Tuple, Union

import numpy as np

from ..exceptions import DomainError, ValidationError

ArrayLike = Union[float, Sequence[float], np.ndarray]


class DriftKind(str, Enum):
    ZERO = "zero"
    CONSTANT = "constant"
    LINEAR = "linear"
    TABULATED = "tabulated"
    EXPRESSION = "expression"


def _bump(t: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, np.sin(3.0 * np.pi * t))


def _simple(t: np.ndarray) -> np.ndarray:
    return 0.2 * _bump(t)


def _level(t: np.ndarray) -> np.ndarray:
    return 0.3 + 0.2 * np.sign(np.sin(2.0 * np.pi * t)) * _bump(t)


def _slope(t: np.ndarray) -> np.ndarray:
    return 0.3 * t + 0.2 * np.sign(np.sin(2.0 * np.pi * t)) * _bump(t)


SCENARIO_DRIFTS = {
    "simple": _simple,
    "level": _level,
    "slope": _slope,
}


@dataclass(frozen=True)
class DriftFunction:
    """A drift evaluable at any grid time.

    Use the constructors rather than the raw fields: ``zero``, ``constant``,
    ``linear``, ``tabulated`` and ``scenario``.
    """

    kind: DriftKind
    value: float = 0.0
    name: str = ""
    times: Tuple[float, ...] = ()
    values: Tuple[float, ...] = ()

    @classmethod
    def zero(cls) -> "DriftFunction":
        return cls(DriftKind.ZERO)

    @classmethod
    def constant(cls, level: float) -> "DriftFunction":
        if not np.isfinite(level):
            raise ValidationError({"level": "must be finite"})
        return cls(DriftKind.CONSTANT, value=float(level))

    @classmethod
    def linear(cls, slope: float) -> "DriftFunction":
        if not np.isfinite(slope):
            raise ValidationError({"slope": "must be finite"})
        return cls(DriftKind.LINEAR, value=float(slope))

    @classmethod
    def tabulated(cls, grid: ArrayLike, values: ArrayLike) -> "DriftFunction":
        grid_arr = np.asarray(grid, dtype=float).ravel()
        values_arr = np.asarray(values, dtype=float).ravel()
        if grid_arr.size == 0 or grid_arr.size != values_arr.size:
            raise ValidationError({"values": "need one value per grid time"})
        if np.any(np.diff(grid_arr) <= 0):
            raise ValidationError({"grid": "must be strictly increasing"})
        if not np.all(np.isfinite(values_arr)):
            raise ValidationError({"values": "must be finite"})
        return cls(
            DriftKind.TABULATED,
            times=tuple(grid_arr.tolist()),
            values=tuple(values_arr.tolist()),
        )

    @classmethod
    def scenario(cls, name: str) -> "DriftFunction":
        if name not in SCENARIO_DRIFTS:
            raise ValidationError(
                {"name": f"unknown scenario drift {name!r}; use one of {sorted(SCENARIO_DRIFTS)}"}
            )
        return cls(DriftKind.EXPRESSION, name=name)

    def __call__(self, t: ArrayLike) -> np.ndarray:
        t_arr = np.asarray(t, dtype=float)

        if self.kind is DriftKind.ZERO:
            return np.zeros_like(t_arr)
        if self.kind is DriftKind.CONSTANT:
            return np.full_like(t_arr, self.value)
        if self.kind is DriftKind.LINEAR:
            return self.value * t_arr
        if self.kind is DriftKind.EXPRESSION:
            return SCENARIO_DRIFTS[self.name](t_arr)

        # tabulated values must be read at the stored times
        times = np.asarray(self.times)
        if t_arr.size and (t_arr.min() < times[0] - 1e-12 or t_arr.max() > times[-1] + 1e-12):
            raise DomainError("tabulated drift evaluated outside its grid")
        return np.interp(t_arr, times, np.asarray(self.values))

    def slope_weight(self, t: ArrayLike) -> np.ndarray:
        """Derivative of alpha(t) with respect to its scalar parameter."""

        t_arr = np.asarray(t, dtype=float)
        if self.kind is DriftKind.CONSTANT:
            return np.ones_like(t_arr)
        if self.kind is DriftKind.LINEAR:
            return t_arr
        raise ValidationError({"kind": f"{self.kind.value} drift has no scalar parameter"})

    def describe(self) -> str:
        if self.kind is DriftKind.ZERO:
            return "zero"
        if self.kind in (DriftKind.CONSTANT, DriftKind.LINEAR):
            return f"{self.kind.value}({self.value!r})"
        if self.kind is DriftKind.EXPRESSION:
            return f"scenario({self.name})"
        return f"tabulated(n={len(self.times)})"
