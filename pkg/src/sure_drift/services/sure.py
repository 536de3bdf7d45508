"""Stein unbiased risk estimates for shrinkage estimators of the drift."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from ..exceptions import DomainError, NumericError
from ..models.covariance import (
    Atomic,
    CovarianceModel,
    Density,
    RiskMeasure,
    baseline_risk,
    canonical_measure,
)
from ..models.drift import DriftFunction
from ..models.path import SamplePath
from . import pathstats
from .shrinkage import ThresholdKind, ThresholdSpec

logger = logging.getLogger(__name__)

CANONICAL = "canonical"
VARIANTS = ("level", "slope")

PointwiseFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
KinkFn = Callable[[np.ndarray], Sequence[np.ndarray]]

_LEGENDRE_NODES, _LEGENDRE_WEIGHTS = np.polynomial.legendre.leggauss(3)
GAUSS_NODES = 0.5 * (_LEGENDRE_NODES + 1.0)
GAUSS_WEIGHTS = 0.5 * _LEGENDRE_WEIGHTS


class Xi(NamedTuple):
    """xi(t, x), its x-derivative and, optionally, the x-levels where either changes form."""

    value: PointwiseFn
    derivative: PointwiseFn
    kinks: Optional[KinkFn] = None


@dataclass(frozen=True)
class SureReport:
    baseline: float
    quadratic: float
    correction: float
    spec: Optional[ThresholdSpec]
    measure: str
    bandwidth: Optional[float] = None
    wide_bandwidth: bool = False

    @property
    def value(self) -> float:
        return self.baseline + self.quadratic + self.correction


def _cell_fractions(path: SamplePath, kinks: Optional[KinkFn]) -> np.ndarray:
    """Sorted split points in [0, 1] of every grid cell, one row per cell.

    A cell is split where X - kink changes sign strictly; cells without a
    crossing repeat the end point, which leaves an empty piece.
    """

    cells = path.grid.size - 1
    columns = [np.zeros(cells), np.ones(cells)]
    if kinks is not None:
        for level in kinks(path.grid):
            offset = path.values - np.broadcast_to(np.asarray(level, dtype=float), path.grid.shape)
            d0, d1 = offset[:-1], offset[1:]
            crossing = d0 * d1 < 0
            columns.append(np.where(crossing, d0 / np.where(crossing, d0 - d1, 1.0), 1.0))
    return np.sort(np.stack(columns, axis=1), axis=1)


def integrate(
    mu: RiskMeasure,
    path: SamplePath,
    integrand: PointwiseFn,
    kinks: Optional[KinkFn] = None,
) -> float:
    """Integrate integrand(t, X_t) against mu on the path.

    Densities are integrated over the piecewise-linear interpolant of the
    path: each cell is cut where X crosses one of the ``kinks`` levels and
    every piece gets a three-point Gauss-Legendre rule. Atoms read the path
    by linear interpolation at the atom times.
    """

    if isinstance(mu, Atomic):
        times = np.asarray(mu.times, dtype=float)
        if times.min() < path.grid[0] - 1e-12 or times.max() > path.grid[-1] + 1e-12:
            raise DomainError("atoms of the risk measure must lie inside the path grid")
        values = np.interp(times, path.grid, path.values)
        return float(np.sum(np.asarray(mu.weights) * integrand(times, values)))
    if isinstance(mu, Density):
        if path.grid.size < 2:
            return 0.0
        fractions = _cell_fractions(path, kinks)
        width = np.diff(fractions, axis=1)[:, :, None]
        points = fractions[:, :-1, None] + width * GAUSS_NODES
        dt = np.diff(path.grid)[:, None, None]
        t = np.minimum(path.grid[:-1, None, None] + points * dt, path.grid[-1])
        x = path.values[:-1, None, None] + points * np.diff(path.values)[:, None, None]
        values = np.broadcast_to(np.asarray(integrand(t.ravel(), x.ravel()), dtype=float), t.size)
        weighted = (values * mu.evaluate(t.ravel())).reshape(t.shape)
        return float(np.sum(dt * width * GAUSS_WEIGHTS * weighted))
    raise TypeError(f"unsupported risk measure {type(mu).__name__}")


def _finite(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise NumericError(f"{what} evaluations are not finite")
    return values


def sure_generic(path: SamplePath, xi: Xi, model: CovarianceModel, mu: RiskMeasure) -> SureReport:
    """R + int xi^2 dmu + 2 int gamma(t,t) xi'(X_t) dmu for a caller-supplied xi.

    ``xi`` is an :class:`Xi` or a plain pair (xi(t, x), d xi / dx (t, x)).
    Kinks, when given, split the grid cells where xi changes form.
    """

    value_fn, derivative_fn, kinks = Xi(*xi)
    quadratic = integrate(mu, path, lambda t, x: _finite(value_fn(t, x), "xi") ** 2, kinks)
    correction = integrate(
        mu,
        path,
        lambda t, x: 2.0 * model.variance(t) * _finite(derivative_fn(t, x), "xi derivative"),
        kinks,
    )
    return SureReport(
        baseline=baseline_risk(model, mu, grid=path.grid),
        quadratic=quadratic,
        correction=correction,
        spec=None,
        measure=mu.name,
    )


def soft_xi(alpha: DriftFunction, lam: float, model: CovarianceModel) -> Xi:
    """The soft-threshold xi, its x-derivative and the band edges alpha +- lam sqrt(gamma)."""

    def value(t: np.ndarray, x: np.ndarray) -> np.ndarray:
        distance = x - alpha(t)
        band = lam * np.sqrt(model.variance(t))
        return -np.sign(distance) * np.minimum(band, np.abs(distance))

    def derivative(t: np.ndarray, x: np.ndarray) -> np.ndarray:
        band = lam * np.sqrt(model.variance(t))
        return -(np.abs(x - alpha(t)) <= band).astype(float)

    return Xi(value, derivative, _band_edges(alpha, lam, model))


def _band_edges(alpha: DriftFunction, lam: float, model: CovarianceModel) -> KinkFn:
    def edges(t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        centre = alpha(t)
        band = lam * np.sqrt(model.variance(t))
        return centre - band, centre + band

    return edges


def sure_soft(
    path: SamplePath,
    alpha: DriftFunction,
    lam: float,
    model: CovarianceModel,
    mu: Optional[RiskMeasure] = None,
) -> SureReport:
    """Closed-form SURE of soft thresholding.

    The canonical measure gamma^{-1}dt, the default, is evaluated in its
    occupation-time form T + int (|Z| ^ lam)^2 dt - 2 L(lam), exactly over
    the interpolated path. Any other ``mu`` integrates the general form
    with the cells split at the band edges.
    """

    spec = ThresholdSpec.soft(lam, alpha)

    if mu is None or (isinstance(mu, Density) and mu.canonical):
        standardized = pathstats.standardize(path, alpha, model)
        return SureReport(
            baseline=standardized.duration,
            quadratic=pathstats.truncated_square(standardized, lam),
            correction=-2.0 * pathstats.occupation_time(standardized, lam),
            spec=spec,
            measure=CANONICAL if mu is None else mu.name,
        )

    def squared(t: np.ndarray, x: np.ndarray) -> np.ndarray:
        distance = x - alpha(t)
        band = lam * np.sqrt(model.variance(t))
        return np.minimum(band, np.abs(distance)) ** 2

    def occupancy(t: np.ndarray, x: np.ndarray) -> np.ndarray:
        variance = model.variance(t)
        inside = (np.abs(x - alpha(t)) <= lam * np.sqrt(variance)).astype(float)
        return 2.0 * variance * -inside

    edges = _band_edges(alpha, lam, model)
    return SureReport(
        baseline=baseline_risk(model, mu, grid=path.grid),
        quadratic=integrate(mu, path, squared, edges),
        correction=integrate(mu, path, occupancy, edges),
        spec=spec,
        measure=mu.name,
    )


def sure_hard(
    path: SamplePath,
    alpha: DriftFunction,
    lam: float,
    model: CovarianceModel,
    bandwidth: Optional[float] = None,
) -> SureReport:
    """T + int Z^2 1{|Z| <= lam} dt + 2 lam lbar(lam) - 2 L(lam), canonical measure only."""

    spec = ThresholdSpec.hard(lam, alpha)
    standardized = pathstats.standardize(path, alpha, model)
    estimate = pathstats.local_time(standardized, lam, bandwidth)
    return SureReport(
        baseline=standardized.duration,
        quadratic=pathstats.band_square(standardized, lam),
        correction=2.0 * lam * estimate.local_time - 2.0 * estimate.occupation,
        spec=spec,
        measure=CANONICAL,
        bandwidth=estimate.bandwidth,
        wide_bandwidth=estimate.wide_bandwidth,
    )


def sure_threshold(
    path: SamplePath,
    spec: ThresholdSpec,
    model: CovarianceModel,
    mu: Optional[RiskMeasure] = None,
    bandwidth: Optional[float] = None,
) -> SureReport:
    if spec.kind is ThresholdKind.SOFT:
        return sure_soft(path, spec.alpha, spec.lam, model, mu)
    if mu is not None:
        raise DomainError("hard-threshold SURE is only available for the canonical measure")
    return sure_hard(path, spec.alpha, spec.lam, model, bandwidth)


def sure_grad_lambda(
    path: SamplePath,
    alpha: DriftFunction,
    lam: float,
    model: CovarianceModel,
    bandwidth: Optional[float] = None,
) -> float:
    """d SURE / d lambda = 2 lam (T - L(lam)) - 2 lbar(lam), soft kind, canonical measure."""

    if lam < 0:
        raise DomainError("lambda must be >= 0")
    standardized = pathstats.standardize(path, alpha, model)
    estimate = pathstats.local_time(standardized, lam, bandwidth)
    return 2.0 * lam * (standardized.duration - estimate.occupation) - 2.0 * estimate.local_time


def _parametrised_alpha(alpha_param: float, variant: str, grid: np.ndarray) -> DriftFunction:
    if variant == "level":
        return DriftFunction.constant(alpha_param)
    if variant == "slope":
        if grid[0] <= 0:
            raise DomainError("the slope variant needs a grid starting after t = 0")
        return DriftFunction.linear(alpha_param)
    raise DomainError(f"unknown alpha variant {variant!r}; use one of {VARIANTS}")


def alpha_gradient_terms(
    path: SamplePath,
    alpha_param: float,
    lam: float,
    model: CovarianceModel,
    variant: str,
    bandwidth: Optional[float] = None,
) -> Tuple[float, float, float]:
    """(int (X-alpha) c / gamma over the band, local time of X + lam sqrt(gamma), of X - lam sqrt(gamma)).

    ``c`` is 1 for the level variant and t for the slope variant; the local
    times are taken at alpha for the level process divided by c.
    """

    if lam < 0:
        raise DomainError("lambda must be >= 0")
    alpha = _parametrised_alpha(alpha_param, variant, path.grid)
    grid = path.grid
    weight = alpha.slope_weight(grid)
    scale = np.sqrt(model.variance(grid))

    standardized = pathstats.standardize(path, alpha, model)
    band_integral = pathstats.band_weighted(standardized, lam, weight / scale)

    centre = alpha(grid)
    inverse_weight = 1.0 / weight
    upper = pathstats.signed_local_time(path, centre - lam * scale, inverse_weight, bandwidth)
    lower = pathstats.signed_local_time(path, centre + lam * scale, inverse_weight, bandwidth)
    return band_integral, upper, lower


def sure_grad_alpha(
    path: SamplePath,
    alpha_param: float,
    lam: float,
    model: CovarianceModel,
    variant: str = "level",
    bandwidth: Optional[float] = None,
) -> float:
    """d SURE / d alpha for alpha(t) = alpha (level) or alpha * t (slope)."""

    band_integral, upper, lower = alpha_gradient_terms(path, alpha_param, lam, model, variant, bandwidth)
    return -2.0 * band_integral + 2.0 * upper - 2.0 * lower


def mu_n_discretize(mu: RiskMeasure, grid: Sequence[float]) -> Atomic:
    """Left-point atoms f(t_i)(t_{i+1} - t_i) at t_i; zero weights are dropped."""

    if not isinstance(mu, Density):
        raise DomainError("only density measures can be discretised")
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise DomainError("discretisation grid needs two or more increasing times")

    weights = mu.evaluate(grid[:-1]) * np.diff(grid)
    keep = weights > 0
    if not np.any(keep):
        raise DomainError("the discretised measure has no mass on this grid")
    return Atomic(
        name=f"{mu.name}_n{grid.size - 1}",
        times=tuple(grid[:-1][keep].tolist()),
        weights=tuple(weights[keep].tolist()),
    )


def sure_finite(x: Sequence[float], lam: float, sigma: float = 1.0) -> float:
    """Vector SURE of soft thresholding: d s^2 + sum min(x^2, lam^2) - 2 s^2 #{|x| <= lam}."""

    x = np.asarray(x, dtype=float).ravel()
    if lam < 0:
        raise DomainError("lambda must be >= 0")
    variance = sigma**2
    return float(
        x.size * variance
        + np.sum(np.minimum(x**2, lam**2))
        - 2.0 * variance * np.count_nonzero(np.abs(x) <= lam)
    )


def true_risk(
    estimate: SamplePath,
    drift: DriftFunction,
    model: CovarianceModel,
    mu: Optional[RiskMeasure] = None,
) -> float:
    """||estimate - u||^2 in L^2(mu); canonical measure when ``mu`` is omitted."""

    measure = canonical_measure(model) if mu is None else mu
    return integrate(measure, estimate, lambda t, x: (x - drift(t)) ** 2)


def risk_bound(
    lam: float,
    drift: DriftFunction,
    alpha: DriftFunction,
    model: CovarianceModel,
    grid: Sequence[float],
) -> float:
    """(1 + lam^2) min(T, int |u - alpha|^2 / gamma dt) + T (1 + lam) exp(-lam^2 / 2)."""

    grid = np.asarray(grid, dtype=float)
    duration = float(grid[-1] - grid[0])
    signal = float(trapezoid((drift(grid) - alpha(grid)) ** 2 / model.variance(grid), grid))
    return (1.0 + lam**2) * min(duration, signal) + duration * (1.0 + lam) * np.exp(-(lam**2) / 2.0)
