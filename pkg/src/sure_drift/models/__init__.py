"""Immutable domain types: covariance models, risk measures, drifts, paths and scenarios."""

from .covariance import (
    Atomic,
    BrownianMotion,
    CovarianceModel,
    Density,
    OrnsteinUhlenbeck,
    RiskMeasure,
    Tabulated,
    baseline_risk,
    canonical_measure,
    eval_gamma,
    lebesgue,
)
from .drift import DriftFunction
from .path import PathMeta, SamplePath

__all__ = [
    "Atomic",
    "BrownianMotion",
    "CovarianceModel",
    "Density",
    "DriftFunction",
    "OrnsteinUhlenbeck",
    "PathMeta",
    "RiskMeasure",
    "SamplePath",
    "Tabulated",
    "baseline_risk",
    "canonical_measure",
    "eval_gamma",
    "lebesgue",
]
