"""Seeded Monte Carlo checks of the risk identities and bounds."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..exceptions import DomainError
from ..models.covariance import CovarianceModel, RiskMeasure, baseline_risk
from ..models.drift import DriftFunction
from ..models.path import SamplePath
from .optimize import SearchSpace, c_of_t, minimize_lambda
from .pathstats import standardize
from .shrinkage import ThresholdKind, ThresholdSpec, apply_estimator
from .simulate import make_grid, simulate
from .sure import risk_bound, sure_threshold, true_risk

logger = logging.getLogger(__name__)

SE_MULTIPLIER = 3.0
COVERAGE_TARGET = 0.95
REPORT_COLUMNS = ["statistic", "label", "mean", "se", "bound", "passed", "n_reps"]


class Statistic(str, Enum):
    UNBIASEDNESS = "unbiasedness"
    RISK_BOUND = "risk_bound"
    COVERAGE = "coverage"
    BASELINE_EFFICIENCY = "baseline_efficiency"


@dataclass(frozen=True)
class McScenario:
    """Model, true drift and grid shared by every replicate."""

    model: CovarianceModel
    drift: DriftFunction
    grid_size: int = 1000
    grid_start: Optional[float] = None
    mu: Optional[RiskMeasure] = None

    def grid(self, model: Optional[CovarianceModel] = None) -> np.ndarray:
        return make_grid(model or self.model, self.grid_size, self.grid_start)


@dataclass(frozen=True)
class McConfig:
    n_reps: int
    seed_base: int
    scenario: McScenario
    statistics: FrozenSet[Statistic] = frozenset(Statistic)
    workers: int = 1

    def seeds(self, n_reps: Optional[int] = None) -> List[int]:
        return [self.seed_base + i for i in range(n_reps or self.n_reps)]


@dataclass(frozen=True)
class McStatistic:
    statistic: str
    label: str
    mean: float
    se: float
    bound: float
    passed: bool
    n_reps: int


@dataclass(frozen=True)
class McReport:
    rows: Tuple[McStatistic, ...] = ()
    constants: Tuple[Tuple[str, float], ...] = field(
        default=(("se_multiplier", SE_MULTIPLIER), ("coverage_target", COVERAGE_TARGET))
    )

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def merge(self, other: "McReport") -> "McReport":
        return McReport(rows=self.rows + other.rows, constants=self.constants)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.__dict__ for row in self.rows], columns=REPORT_COLUMNS)

    def to_text(self) -> str:
        lines = [f"{name} = {value!r}" for name, value in self.constants]
        for row in self.rows:
            status = "PASS" if row.passed else "FAIL"
            lines.append(
                f"[{status}] {row.statistic} {row.label}: mean={row.mean!r} se={row.se!r} "
                f"bound={row.bound!r} n_reps={row.n_reps}"
            )
        lines.append(f"overall = {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def mean_and_se(samples: Sequence[float]) -> Tuple[float, float]:
    """Sample mean and std / sqrt(n), summed in index order."""

    values = np.asarray(samples, dtype=float)
    if values.size < 2:
        raise DomainError("at least two replicates are needed for a standard error")
    return float(np.mean(values)), float(np.std(values, ddof=1) / math.sqrt(values.size))


def _replicate(cfg: McConfig, fn: Callable[[int], object], n_reps: Optional[int] = None) -> List:
    if (n_reps or cfg.n_reps) < 2:
        raise DomainError("n_reps must be at least 2")
    seeds = cfg.seeds(n_reps)
    if cfg.workers <= 1:
        return [fn(seed) for seed in seeds]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(fn, seeds))


def _simulate(cfg: McConfig, seed: int, model: Optional[CovarianceModel] = None,
              drift: Optional[DriftFunction] = None) -> SamplePath:
    model = model or cfg.scenario.model
    return simulate(model, drift or cfg.scenario.drift, cfg.scenario.grid(model), seed)


def run_unbiasedness(cfg: McConfig, spec: ThresholdSpec) -> McReport:
    """Paired SURE minus true risk per replicate; passes when |mean| <= 3 SE."""

    scenario = cfg.scenario

    def replicate(seed: int) -> float:
        path = _simulate(cfg, seed)
        estimate = apply_estimator(path, spec, scenario.model)
        sure = sure_threshold(path, spec, scenario.model, scenario.mu).value
        return sure - true_risk(estimate, scenario.drift, scenario.model, scenario.mu)

    mean, se = mean_and_se(_replicate(cfg, replicate))
    label = f"{spec.kind.value} lambda={spec.lam!r}"
    logger.info("Unbiasedness %s: mean difference %.4g (se %.4g)", label, mean, se)
    return McReport(
        rows=(
            McStatistic(
                statistic=Statistic.UNBIASEDNESS.value,
                label=label,
                mean=mean,
                se=se,
                bound=0.0,
                passed=abs(mean) <= SE_MULTIPLIER * se,
                n_reps=cfg.n_reps,
            ),
        )
    )


def run_risk_bound(cfg: McConfig, alpha: DriftFunction, lambdas: Sequence[float]) -> McReport:
    """Mean true risk of soft thresholding against its closed-form upper bound."""

    scenario = cfg.scenario
    grid = scenario.grid()
    rows = []
    for lam in lambdas:
        spec = ThresholdSpec.soft(float(lam), alpha)

        def replicate(seed: int) -> float:
            path = _simulate(cfg, seed)
            return true_risk(apply_estimator(path, spec, scenario.model), scenario.drift, scenario.model)

        mean, se = mean_and_se(_replicate(cfg, replicate))
        bound = risk_bound(float(lam), scenario.drift, alpha, scenario.model, grid)
        rows.append(
            McStatistic(
                statistic=Statistic.RISK_BOUND.value,
                label=f"lambda={float(lam)!r}",
                mean=mean,
                se=se,
                bound=float(bound),
                passed=mean <= bound + SE_MULTIPLIER * se,
                n_reps=cfg.n_reps,
            )
        )
    return McReport(rows=tuple(rows))


def run_coverage(cfg: McConfig, r: float, horizons: Sequence[float], n_reps: Optional[int] = None) -> McReport:
    """Empirical P(max |Z| <= sqrt(2 r log T)) of the centred noise per horizon.

    The maximum is taken over grid points only. Passes when coverage does
    not fall by more than 3 SE between horizons and the last one reaches 95%.
    """

    if r <= 1.0:
        raise DomainError("coverage needs r > 1")
    reps = n_reps or cfg.n_reps
    zero = DriftFunction.zero()
    rows = []
    previous: Optional[Tuple[float, float]] = None
    trend_ok = True
    for horizon in horizons:
        model = cfg.scenario.model.with_horizon(float(horizon))
        level = c_of_t(float(horizon), r)

        def replicate(seed: int) -> float:
            path = _simulate(cfg, seed, model=model, drift=zero)
            z = standardize(path, zero, model).z
            return float(np.max(np.abs(z)) <= level)

        mean, se = mean_and_se(_replicate(cfg, replicate, reps))
        if previous is not None:
            trend_ok = trend_ok and mean >= previous[0] - SE_MULTIPLIER * max(se, previous[1])
        previous = (mean, se)
        rows.append(
            McStatistic(
                statistic=Statistic.COVERAGE.value,
                label=f"T={float(horizon)!r} r={r!r}",
                mean=mean,
                se=se,
                bound=COVERAGE_TARGET,
                passed=True,
                n_reps=reps,
            )
        )

    final_ok = bool(rows) and rows[-1].mean >= COVERAGE_TARGET
    verdict = trend_ok and final_ok
    rows = [McStatistic(**{**row.__dict__, "passed": verdict}) for row in rows]
    return McReport(rows=tuple(rows))


def run_baseline_efficiency(
    cfg: McConfig,
    compare_sure: bool = True,
    space: Optional[SearchSpace] = None,
) -> McReport:
    """Mean risk of the observation against the integral of gamma dmu.

    With ``compare_sure`` the SURE-tuned soft estimator (alpha = 0) is
    compared to the observation on the same replicates; it passes when its
    mean risk is smaller.
    """

    scenario = cfg.scenario
    grid = scenario.grid()
    measure_bound = baseline_risk(scenario.model, scenario.mu, grid) if scenario.mu is not None else float(
        grid[-1] - grid[0]
    )
    search = space or SearchSpace()
    zero = DriftFunction.zero()

    def replicate(seed: int) -> Tuple[float, float]:
        path = _simulate(cfg, seed)
        observed = true_risk(path, scenario.drift, scenario.model, scenario.mu)
        if not compare_sure:
            return observed, float("nan")
        tuned = minimize_lambda(path, zero, search, scenario.model)
        estimate = apply_estimator(path, ThresholdSpec.soft(tuned.lambda_star, zero), scenario.model)
        return observed, true_risk(estimate, scenario.drift, scenario.model, scenario.mu)

    results = _replicate(cfg, replicate)
    observed = [pair[0] for pair in results]
    mean, se = mean_and_se(observed)
    rows = [
        McStatistic(
            statistic=Statistic.BASELINE_EFFICIENCY.value,
            label="observation",
            mean=mean,
            se=se,
            bound=measure_bound,
            passed=abs(mean - measure_bound) <= SE_MULTIPLIER * se,
            n_reps=cfg.n_reps,
        )
    ]
    if compare_sure:
        tuned = np.array([pair[1] for pair in results])
        _, diff_se = mean_and_se(tuned - np.array(observed))
        ratio = float(np.mean(tuned) / mean)
        rows.append(
            McStatistic(
                statistic=Statistic.BASELINE_EFFICIENCY.value,
                label="sure_soft/observation",
                mean=ratio,
                se=diff_se / mean,
                bound=1.0,
                passed=ratio < 1.0,
                n_reps=cfg.n_reps,
            )
        )
    return McReport(rows=tuple(rows))


def run_statistics(
    cfg: McConfig,
    lambdas: Sequence[float] = (0.3, 1.0),
    hard_lambda: Optional[float] = None,
    alpha: Optional[DriftFunction] = None,
    bound_lambdas: Sequence[float] = (0.5, 1.0, 2.0),
    r: float = 1.5,
    horizons: Sequence[float] = (10.0, 100.0, 1000.0),
    coverage_reps: Optional[int] = None,
) -> McReport:
    """Run the configured statistic set in a fixed order."""

    if cfg.n_reps < 2:
        raise DomainError("n_reps must be at least 2")
    alpha = alpha or DriftFunction.zero()
    report = McReport()
    if Statistic.UNBIASEDNESS in cfg.statistics:
        for lam in lambdas:
            report = report.merge(run_unbiasedness(cfg, ThresholdSpec.soft(float(lam), alpha)))
        if hard_lambda is not None:
            report = report.merge(run_unbiasedness(cfg, ThresholdSpec(ThresholdKind.HARD, alpha, hard_lambda)))
    if Statistic.RISK_BOUND in cfg.statistics:
        report = report.merge(run_risk_bound(cfg, alpha, bound_lambdas))
    if Statistic.COVERAGE in cfg.statistics:
        report = report.merge(run_coverage(cfg, r, horizons, coverage_reps))
    if Statistic.BASELINE_EFFICIENCY in cfg.statistics:
        report = report.merge(run_baseline_efficiency(cfg))
    return report
