"""Threshold functions and the shrinkage estimators X + xi(X)."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from ..exceptions import ValidationError
from ..models.covariance import CovarianceModel
from ..models.drift import DriftFunction
from ..models.path import SamplePath

ArrayLike = Union[float, np.ndarray]


class ThresholdKind(str, Enum):
    SOFT = "soft"
    HARD = "hard"


def eta_soft(y: ArrayLike) -> ArrayLike:
    y = np.asarray(y, dtype=float)
    result = np.sign(y) * np.maximum(np.abs(y) - 1.0, 0.0)
    return float(result) if result.ndim == 0 else result


def eta_hard(y: ArrayLike) -> ArrayLike:
    y = np.asarray(y, dtype=float)
    result = np.where(np.abs(y) > 1.0, y, 0.0)
    return float(result) if result.ndim == 0 else result


@dataclass(frozen=True)
class ThresholdSpec:
    """Shrinkage towards alpha(t) inside the band lambda * sqrt(gamma(t,t))."""

    kind: ThresholdKind
    alpha: DriftFunction
    lam: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValidationError({"lam": "threshold level must be finite and >= 0"})
        object.__setattr__(self, "kind", ThresholdKind(self.kind))

    @classmethod
    def soft(cls, lam: float, alpha: DriftFunction = None) -> "ThresholdSpec":
        return cls(ThresholdKind.SOFT, alpha or DriftFunction.zero(), lam)

    @classmethod
    def hard(cls, lam: float, alpha: DriftFunction = None) -> "ThresholdSpec":
        return cls(ThresholdKind.HARD, alpha or DriftFunction.zero(), lam)

    def band(self, model: CovarianceModel, grid: np.ndarray) -> np.ndarray:
        """lambda(t) = lambda * sqrt(gamma(t,t))."""
        return self.lam * np.sqrt(model.variance(grid))


def shrink_values(values: np.ndarray, centre: np.ndarray, band: np.ndarray, kind: ThresholdKind) -> np.ndarray:
    distance = values - centre
    if kind is ThresholdKind.SOFT:
        return np.where(np.abs(distance) <= band, centre, values - np.sign(distance) * band)
    return np.where(np.abs(distance) < band, centre, values)


def apply_estimator(path: SamplePath, spec: ThresholdSpec, model: CovarianceModel) -> SamplePath:
    """Pointwise X_t + xi_t(X_t).

    Soft pulls each value towards alpha(t) by at most lambda(t) and never
    across it; hard replaces values strictly inside the band by alpha(t).
    """

    grid = path.grid
    shrunk = shrink_values(path.values, spec.alpha(grid), spec.band(model, grid), spec.kind)
    return path.with_values(shrunk, note=f"{spec.kind.value}(lam={spec.lam!r},alpha={spec.alpha.describe()})")
