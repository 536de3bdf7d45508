"""Grid search and golden-section refinement of the SURE surface."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..exceptions import DomainError, ValidationError
from ..models.covariance import CovarianceModel
from ..models.drift import DriftFunction
from ..models.path import SamplePath
from .sure import SureReport, sure_grad_alpha, sure_grad_lambda, sure_soft

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
GOLDEN_TOLERANCE = 1e-8
ALTERNATE_FRACTION = 0.05
TRACE_COLUMNS = ["alpha", "lambda", "sure", "baseline", "quadratic", "correction"]


def c_of_t(horizon: float, r: float = 1.01, floor: float = 3.0) -> float:
    """Upper threshold level sqrt(2 r log T); ``floor`` when T <= 1."""

    if horizon <= 0:
        raise DomainError("horizon must be > 0")
    if horizon <= 1.0:
        return float(floor)
    if r <= 1.0:
        logger.warning("c_of_t called with r=%.3g <= 1; the sup bound is not guaranteed", r)
    return math.sqrt(2.0 * r * math.log(horizon))


@dataclass(frozen=True)
class SearchSpace:
    r: float = 1.01
    floor: float = 3.0
    lambda_max: Optional[float] = None
    n_lambda: int = 200
    n_alpha: int = 60
    n_lambda_joint: int = 60
    alpha_range: Optional[Tuple[float, float]] = None
    refine: bool = True
    refine_sweeps: int = 2
    workers: int = 1
    gradient_tolerance: float = 0.1

    def __post_init__(self) -> None:
        problems = {}
        if self.n_lambda < 2 or self.n_alpha < 2 or self.n_lambda_joint < 2:
            problems["grid"] = "grid counts must be at least 2"
        if self.lambda_max is not None and not self.lambda_max > 0:
            problems["lambda_max"] = "must be > 0"
        if self.alpha_range is not None and not self.alpha_range[0] < self.alpha_range[1]:
            problems["alpha_range"] = "lower bound must be below the upper bound"
        if self.workers < 1:
            problems["workers"] = "must be >= 1"
        if problems:
            raise ValidationError(problems)

    def effective_r(self, horizon: float) -> float:
        return 1.0 if horizon <= math.e else self.r

    def lambda_upper(self, horizon: float) -> float:
        if self.lambda_max is not None:
            return float(self.lambda_max)
        return c_of_t(horizon, self.effective_r(horizon), self.floor)

    def lambda_grid(self, horizon: float, count: Optional[int] = None) -> np.ndarray:
        return np.linspace(0.0, self.lambda_upper(horizon), count or self.n_lambda)

    def alpha_grid(self, path: SamplePath, variant: str) -> np.ndarray:
        low, high = self.alpha_range or default_alpha_range(path, variant)
        return np.linspace(low, high, self.n_alpha)


def default_alpha_range(path: SamplePath, variant: str) -> Tuple[float, float]:
    if variant == "level":
        low, high = float(path.values.min()), float(path.values.max())
    else:
        bound = 2.0 * float(np.abs(path.values).max()) / path.horizon
        low, high = -bound, bound
    if low == high:
        low, high = low - 1.0, high + 1.0
    return low, high


@dataclass(frozen=True)
class Candidate:
    alpha: float
    lam: float
    sure: float


@dataclass(frozen=True)
class OptimResult:
    alpha_star: float
    lambda_star: float
    sure_min: float
    trace: pd.DataFrame = field(compare=False, repr=False)
    gradient_at_min: Dict[str, float] = field(default_factory=dict)
    stationary: bool = False
    variant: str = "fixed"
    grid_optimum: Optional[Candidate] = None
    alternates: Tuple[Candidate, ...] = ()

    @property
    def surface(self) -> pd.DataFrame:
        """Grid evaluations only, as exported by the sweep command."""
        return self.trace[self.trace["stage"] == "grid"][TRACE_COLUMNS].reset_index(drop=True)


def golden_section(
    f: Callable[[float], float],
    lower: float,
    upper: float,
    tol: float = GOLDEN_TOLERANCE,
) -> List[Tuple[float, float]]:
    """Golden-section search on [lower, upper]; returns every (x, f(x)) evaluated.

    Ties keep the left sub-interval so flat stretches resolve to their
    smallest argument.
    """

    evaluations: List[Tuple[float, float]] = []

    def evaluate(x: float) -> float:
        value = f(x)
        evaluations.append((x, value))
        return value

    a, b = lower, upper
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = evaluate(c), evaluate(d)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = evaluate(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = evaluate(d)
    return evaluations


def _best(evaluations: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    return min(evaluations, key=lambda item: (item[1], item[0]))


def _map(fn: Callable, items: Sequence, workers: int) -> List:
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _row(alpha_value: float, lam: float, report: SureReport, stage: str) -> Dict[str, object]:
    return {
        "alpha": alpha_value,
        "lambda": lam,
        "sure": report.value,
        "baseline": report.baseline,
        "quadratic": report.quadratic,
        "correction": report.correction,
        "stage": stage,
    }


def _alpha_for(variant: str, value: float, fixed: Optional[DriftFunction]) -> DriftFunction:
    if variant == "fixed":
        return fixed
    if variant == "level":
        return DriftFunction.constant(value)
    return DriftFunction.linear(value)


def _alpha_label(alpha: DriftFunction) -> float:
    return alpha.value if alpha.kind.value in ("constant", "linear") else 0.0


def minimize_lambda(
    path: SamplePath,
    alpha: DriftFunction,
    space: SearchSpace,
    model: CovarianceModel,
) -> OptimResult:
    """Scan sure_soft over the lambda grid, then refine inside the best cell."""

    lambdas = space.lambda_grid(path.duration)
    if lambdas.size == 0:
        raise DomainError("empty lambda grid")
    label = _alpha_label(alpha)

    reports = _map(lambda lam: sure_soft(path, alpha, float(lam), model), lambdas, space.workers)
    rows = [_row(label, float(lam), report, "grid") for lam, report in zip(lambdas, reports)]
    values = np.array([report.value for report in reports])
    index = int(np.argmin(values))
    grid_optimum = Candidate(label, float(lambdas[index]), float(values[index]))

    best_lam, best_value = grid_optimum.lam, grid_optimum.sure
    if space.refine and lambdas.size > 1:
        lower = float(lambdas[max(index - 1, 0)])
        upper = float(lambdas[min(index + 1, lambdas.size - 1)])

        def objective(lam: float) -> float:
            report = sure_soft(path, alpha, lam, model)
            rows.append(_row(label, lam, report, "refine"))
            return report.value

        evaluations = golden_section(objective, lower, upper)
        candidate_lam, candidate_value = _best(evaluations)
        if (candidate_value, candidate_lam) < (best_value, best_lam):
            best_lam, best_value = candidate_lam, candidate_value

    gradient = {"lambda": sure_grad_lambda(path, alpha, best_lam, model)}
    logger.debug("minimize_lambda: grid optimum %.6g, refined %.6g", grid_optimum.lam, best_lam)
    return OptimResult(
        alpha_star=label,
        lambda_star=best_lam,
        sure_min=best_value,
        trace=pd.DataFrame(rows),
        gradient_at_min=gradient,
        stationary=bool(abs(gradient["lambda"]) <= space.gradient_tolerance),
        variant="fixed",
        grid_optimum=grid_optimum,
    )


def _profile_alternates(
    alphas: np.ndarray, lambdas: np.ndarray, values: np.ndarray, best_index: int
) -> Tuple[Candidate, ...]:
    """Strict local minima of the alpha profile within 5% of the global minimum."""

    profile = values.min(axis=1)
    argmins = values.argmin(axis=1)
    global_min = float(values.min())
    limit = global_min + ALTERNATE_FRACTION * abs(global_min)
    alternates = []
    for i in range(profile.size):
        if i == best_index:
            continue
        left = profile[i - 1] if i > 0 else np.inf
        right = profile[i + 1] if i < profile.size - 1 else np.inf
        if profile[i] < left and profile[i] < right and profile[i] <= limit:
            alternates.append(Candidate(float(alphas[i]), float(lambdas[argmins[i]]), float(profile[i])))
    return tuple(alternates)


def minimize_joint(
    path: SamplePath,
    variant: str,
    space: SearchSpace,
    model: CovarianceModel,
) -> OptimResult:
    """Scan sure_soft over an (alpha, lambda) grid for a level or slope centre."""

    if variant not in ("level", "slope"):
        raise DomainError(f"unknown joint variant {variant!r}")
    if variant == "slope" and path.grid[0] <= 0:
        raise DomainError("the slope variant needs a grid starting after t = 0")

    alphas = space.alpha_grid(path, variant)
    lambdas = space.lambda_grid(path.duration, space.n_lambda_joint)
    if alphas.size == 0 or lambdas.size == 0:
        raise DomainError("empty search grid")

    def evaluate(pair: Tuple[float, float]) -> SureReport:
        alpha_value, lam = pair
        return sure_soft(path, _alpha_for(variant, alpha_value, None), lam, model)

    pairs = [(float(a), float(lam)) for a in alphas for lam in lambdas]
    reports = _map(evaluate, pairs, space.workers)
    rows = [_row(a, lam, report, "grid") for (a, lam), report in zip(pairs, reports)]
    values = np.array([report.value for report in reports]).reshape(alphas.size, lambdas.size)

    ties = np.argwhere(values == values.min())
    # smallest lambda first, then smallest alpha
    i, j = (int(k) for k in min(ties, key=lambda pair: (pair[1], pair[0])))
    grid_optimum = Candidate(float(alphas[i]), float(lambdas[j]), float(values[i, j]))

    best = (grid_optimum.sure, grid_optimum.lam, grid_optimum.alpha)
    if space.refine:
        a_lo, a_hi = float(alphas[max(i - 1, 0)]), float(alphas[min(i + 1, alphas.size - 1)])
        l_lo, l_hi = float(lambdas[max(j - 1, 0)]), float(lambdas[min(j + 1, lambdas.size - 1)])

        def objective(alpha_value: float, lam: float) -> float:
            report = evaluate((alpha_value, lam))
            rows.append(_row(alpha_value, lam, report, "refine"))
            return report.value

        for _ in range(space.refine_sweeps):
            _, lam, alpha_value = best
            lam, value = _best(golden_section(lambda x: objective(alpha_value, x), l_lo, l_hi))
            best = min(best, (value, lam, alpha_value))

            _, lam, alpha_value = best
            alpha_value, value = _best(golden_section(lambda x: objective(x, lam), a_lo, a_hi))
            best = min(best, (value, lam, alpha_value))

    sure_min, lambda_star, alpha_star = best
    gradient = {
        "lambda": sure_grad_lambda(path, _alpha_for(variant, alpha_star, None), lambda_star, model),
        "alpha": sure_grad_alpha(path, alpha_star, lambda_star, model, variant),
    }
    logger.debug(
        "minimize_joint(%s): grid optimum alpha=%.6g lambda=%.6g, refined alpha=%.6g lambda=%.6g",
        variant,
        grid_optimum.alpha,
        grid_optimum.lam,
        alpha_star,
        lambda_star,
    )
    return OptimResult(
        alpha_star=alpha_star,
        lambda_star=lambda_star,
        sure_min=sure_min,
        trace=pd.DataFrame(rows),
        gradient_at_min=gradient,
        stationary=bool(all(abs(g) <= space.gradient_tolerance for g in gradient.values())),
        variant=variant,
        grid_optimum=grid_optimum,
        alternates=_profile_alternates(alphas, lambdas, values, i),
    )


def sweep_surface(
    path: SamplePath,
    variant: str,
    space: SearchSpace,
    model: CovarianceModel,
    alpha: Optional[DriftFunction] = None,
) -> pd.DataFrame:
    """Grid evaluations of the SURE surface without refinement."""

    unrefined = replace(space, refine=False)
    if variant == "fixed":
        return minimize_lambda(path, alpha or DriftFunction.zero(), unrefined, model).surface
    return minimize_joint(path, variant, unrefined, model).surface
