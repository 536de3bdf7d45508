"""Result builders shared by the command line and the tool server.

A builder takes a resolved :class:`RunPlan`, writes its result files and
returns a :class:`ServiceResult`. Library errors never escape: they are
logged and turned into a payload with an ``error`` entry and a non-zero
exit code.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np
import pandas as pd

from sure_drift.exceptions import (
    ConfigError,
    DomainError,
    NumericError,
    StorageError,
    SureError,
    ValidationError,
)
from sure_drift.models.covariance import (
    BrownianMotion,
    CovarianceModel,
    OrnsteinUhlenbeck,
    RiskMeasure,
    Tabulated,
    lebesgue,
)
from sure_drift.models.drift import DriftFunction
from sure_drift.models.path import SamplePath
from sure_drift.models.scenario import ModelSection, RunPlan, ScenarioConfig
from sure_drift.services import persistence
from sure_drift.services.montecarlo import McConfig, McScenario, Statistic, run_statistics
from sure_drift.services.optimize import (
    TRACE_COLUMNS,
    OptimResult,
    SearchSpace,
    minimize_joint,
    minimize_lambda,
    sweep_surface,
)
from sure_drift.services.pathstats import occupation_curve, standardize
from sure_drift.services.shrinkage import ThresholdKind, ThresholdSpec, apply_estimator
from sure_drift.services.simulate import make_grid, simulate
from sure_drift.services.sure import sure_threshold

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED_CHECKS = 1
EXIT_USAGE = 2
EXIT_STORAGE = 3
EXIT_NUMERIC = 4

SLOPE_START_FRACTION = 1e-3


@dataclass
class ServiceResult:
    """Container for builder responses shared by the CLI and MCP surfaces."""

    payload: dict
    exit_code: int = EXIT_OK

    @property
    def ok(self) -> bool:
        return self.exit_code == EXIT_OK


def build_model(section: ModelSection) -> CovarianceModel:
    if section.kind == "ou":
        return OrnsteinUhlenbeck(horizon=section.horizon, a=section.a, sigma=section.sigma)
    if section.kind == "brownian":
        return BrownianMotion(horizon=section.horizon, sigma=section.sigma, t0=section.t0)
    return Tabulated(grid=section.grid, matrix=section.matrix)


def build_drift(config: ScenarioConfig) -> DriftFunction:
    """True drift of the scenario; the custom scenario reads its drift section."""

    if config.scenario != "custom":
        return DriftFunction.scenario(config.scenario)

    section = config.drift
    if section.kind == "zero":
        return DriftFunction.zero()
    if section.kind == "constant":
        return DriftFunction.constant(section.value)
    if section.kind == "linear":
        return DriftFunction.linear(section.value)
    if section.kind == "tabulated":
        return DriftFunction.tabulated(section.times, section.values)
    return DriftFunction.scenario(section.name)


def build_fixed_alpha(config: ScenarioConfig) -> DriftFunction:
    value = config.alpha.value if config.alpha is not None else 0.0
    return DriftFunction.constant(value) if value else DriftFunction.zero()


def build_grid(config: ScenarioConfig, model: CovarianceModel) -> np.ndarray:
    """Scenario grid; slope runs start after t = 0 unless told otherwise."""

    start = config.grid.start
    if start is None and config.alpha_variant == "slope" and model.start <= 0:
        start = SLOPE_START_FRACTION * model.horizon
    return make_grid(model, config.grid.size, start)


def build_search_space(config: ScenarioConfig, workers: int = 1) -> SearchSpace:
    section = config.search
    alpha_range = None
    if section.alpha_min is not None and section.alpha_max is not None:
        alpha_range = (section.alpha_min, section.alpha_max)
    return SearchSpace(
        r=section.r,
        floor=section.floor,
        lambda_max=section.lambda_max,
        n_lambda=section.n_lambda,
        n_alpha=section.n_alpha,
        n_lambda_joint=section.n_lambda_joint,
        alpha_range=alpha_range,
        refine=section.refine,
        workers=workers,
    )


def build_measure(name: str) -> Optional[RiskMeasure]:
    """``None`` selects the canonical measure gamma(t,t)^-1 dt."""

    return lebesgue() if name == "lebesgue" else None


def load_path(plan: RunPlan, model: CovarianceModel, drift: DriftFunction) -> SamplePath:
    """The input CSV when one is configured, otherwise a fresh simulation."""

    config = plan.config
    if config.input.path:
        logger.info("Reading input path from %s", config.input.path)
        return persistence.read_path_csv(config.input.path)
    grid = build_grid(config, model)
    logger.debug("Simulating %s on %d grid points with seed %d", model.id, grid.size, plan.seed)
    return simulate(model, drift, grid, plan.seed)


def _header(plan: RunPlan) -> persistence.RunHeader:
    return persistence.RunHeader(config_hash=plan.config_hash, seed=plan.seed)


def _base_payload(plan: RunPlan) -> dict:
    return {
        "command": plan.command,
        "scenario": plan.config.scenario,
        "seed": plan.seed,
        "config_hash": plan.config_hash,
        "output_dir": plan.output_dir,
    }


def _centre(variant: str, value: float, fixed: DriftFunction) -> DriftFunction:
    if variant == "level":
        return DriftFunction.constant(value)
    if variant == "slope":
        return DriftFunction.linear(value)
    return fixed


def _optimize(path: SamplePath, config: ScenarioConfig, model: CovarianceModel, space: SearchSpace) -> OptimResult:
    variant = config.alpha_variant
    if variant == "fixed":
        return minimize_lambda(path, build_fixed_alpha(config), space, model)
    return minimize_joint(path, variant, space, model)


def _degenerate_optimum(config: ScenarioConfig) -> OptimResult:
    """Without noise the observation is the drift and lambda* = 0.

    SURE divides by gamma(t,t), so it has no value here and ``sure_min`` is nan.
    """

    alpha = build_fixed_alpha(config)
    return OptimResult(
        alpha_star=alpha.value,
        lambda_star=0.0,
        sure_min=float("nan"),
        trace=pd.DataFrame(columns=TRACE_COLUMNS + ["stage"]),
        variant=config.alpha_variant,
        stationary=True,
    )


def _run(plan: RunPlan, body: Callable[[dict], int], log: logging.Logger) -> ServiceResult:
    payload = _base_payload(plan)
    try:
        exit_code = body(payload)
    except (ConfigError, DomainError, ValidationError) as error:
        log.error("%s failed: %s", plan.command, error, exc_info=True)
        return ServiceResult({**payload, "error": str(error)}, EXIT_USAGE)
    except StorageError as error:
        log.error("%s could not access %s: %s", plan.command, error.path, error, exc_info=True)
        return ServiceResult({**payload, "error": str(error), "path": error.path}, EXIT_STORAGE)
    except (NumericError, SureError) as error:
        log.error("%s hit a numerical failure: %s", plan.command, error, exc_info=True)
        return ServiceResult({**payload, "error": str(error)}, EXIT_NUMERIC)
    except (ArithmeticError, TypeError, np.linalg.LinAlgError) as error:
        wrapped = NumericError(f"{type(error).__name__}: {error}")
        log.error("%s hit a numerical failure: %s", plan.command, wrapped, exc_info=True)
        return ServiceResult({**payload, "error": str(wrapped)}, EXIT_NUMERIC)
    return ServiceResult(payload, exit_code)


def build_simulate_result(plan: RunPlan, log: Optional[logging.Logger] = None) -> ServiceResult:
    """Write ``path.csv`` with columns t, x, u."""

    log = log or logger

    def body(payload: dict) -> int:
        model = build_model(plan.config.model)
        path = load_path(plan, model, build_drift(plan.config))
        target = persistence.write_path(plan.output_dir, path, _header(plan))
        payload.update(rows=len(path), files=[str(target)])
        return EXIT_OK

    return _run(plan, body, log)


def build_sweep_result(plan: RunPlan, log: Optional[logging.Logger] = None) -> ServiceResult:
    """Write ``surface.csv``: a lambda sweep, or an (alpha, lambda) grid for level and slope."""

    log = log or logger

    def body(payload: dict) -> int:
        config = plan.config
        model = build_model(config.model)
        path = load_path(plan, model, build_drift(config))
        space = build_search_space(config, plan.workers)
        surface = sweep_surface(path, config.alpha_variant, space, model, build_fixed_alpha(config))
        target = persistence.write_surface(plan.output_dir, surface, _header(plan))
        best = surface.loc[surface["sure"].idxmin()]
        payload.update(
            rows=int(surface.shape[0]),
            variant=config.alpha_variant,
            grid_minimum={"alpha": float(best["alpha"]), "lambda": float(best["lambda"]), "sure": float(best["sure"])},
            files=[str(target)],
        )
        return EXIT_OK

    return _run(plan, body, log)


def build_optimize_result(plan: RunPlan, log: Optional[logging.Logger] = None) -> ServiceResult:
    """Minimise SURE, then write the optimum, the denoised path, the trace and a level sweep."""

    log = log or logger

    def body(payload: dict) -> int:
        config = plan.config
        model = build_model(config.model)
        path = load_path(plan, model, build_drift(config))
        space = build_search_space(config, plan.workers)
        header = _header(plan)

        if model.is_degenerate:
            log.info("Model %s has no noise; returning the observation unchanged", model.id)
            result = _degenerate_optimum(config)
        else:
            result = _optimize(path, config, model, space)

        centre = _centre(result.variant, result.alpha_star, build_fixed_alpha(config))
        estimate = apply_estimator(path, ThresholdSpec.soft(result.lambda_star, centre), model)
        scale = float(np.mean(np.sqrt(model.variance(path.grid))))

        files = [
            persistence.write_optimum(
                plan.output_dir, result, header, extra=[("lambda_star_scaled", result.lambda_star * scale)]
            ),
            persistence.write_denoised(plan.output_dir, estimate, header),
            persistence.write_trace(plan.output_dir, result, header),
        ]
        if not model.is_degenerate:
            levels = space.lambda_grid(path.duration)
            estimates = occupation_curve(standardize(path, centre, model), levels)
            files.append(persistence.write_levels(plan.output_dir, estimates, header))

        payload.update(
            variant=result.variant,
            alpha_star=result.alpha_star,
            lambda_star=result.lambda_star,
            lambda_star_scaled=result.lambda_star * scale,
            sure_min=result.sure_min,
            stationary=result.stationary,
            alternates=[{"alpha": c.alpha, "lambda": c.lam, "sure": c.sure} for c in result.alternates],
            files=[str(target) for target in files],
        )
        log.info("Optimum alpha*=%.6g lambda*=%.6g SURE=%.6g", result.alpha_star, result.lambda_star, result.sure_min)
        return EXIT_OK

    return _run(plan, body, log)


def build_denoise_result(plan: RunPlan, log: Optional[logging.Logger] = None) -> ServiceResult:
    """Apply the configured threshold with fixed alpha and lambda; write ``denoised.csv``."""

    log = log or logger

    def body(payload: dict) -> int:
        config = plan.config
        section = config.threshold
        model = build_model(config.model)
        path = load_path(plan, model, build_drift(config))
        centre = _centre(section.variant, section.alpha, DriftFunction.zero())
        spec = ThresholdSpec(ThresholdKind(section.kind), centre, section.lam)
        estimate = apply_estimator(path, spec, model)
        target = persistence.write_denoised(plan.output_dir, estimate, _header(plan))

        payload.update(kind=spec.kind.value, lam=spec.lam, alpha=centre.describe(), files=[str(target)])
        if not model.is_degenerate:
            payload["sure"] = sure_threshold(path, spec, model).value
        return EXIT_OK

    return _run(plan, body, log)


def build_validate_result(plan: RunPlan, log: Optional[logging.Logger] = None) -> ServiceResult:
    """Run the configured Monte Carlo statistics; exit 1 when any check fails."""

    log = log or logger

    def body(payload: dict) -> int:
        config = plan.config
        section = config.validation
        model = build_model(config.model)
        scenario = McScenario(
            model=model,
            drift=build_drift(config),
            grid_size=config.grid.size,
            grid_start=config.grid.start,
            mu=build_measure(section.measure),
        )
        mc_config = McConfig(
            n_reps=section.n_reps,
            seed_base=plan.seed + section.seed_base,
            scenario=scenario,
            statistics=frozenset(Statistic(name) for name in section.statistics),
            workers=plan.workers,
        )
        alpha = DriftFunction.constant(section.alpha) if section.alpha else DriftFunction.zero()
        report = run_statistics(
            mc_config,
            lambdas=section.lambdas,
            hard_lambda=section.hard_lambda,
            alpha=alpha,
            bound_lambdas=section.bound_lambdas,
            r=section.r,
            horizons=section.horizons,
            coverage_reps=section.coverage_reps,
        )
        files = persistence.write_report(plan.output_dir, report, _header(plan))
        payload.update(
            passed=report.passed,
            statistics=report.to_frame().to_dict(orient="records"),
            files=[str(target) for target in files],
        )
        if not report.passed:
            log.warning("Validation failed for %d of %d checks", sum(not r.passed for r in report.rows), len(report.rows))
            return EXIT_FAILED_CHECKS
        return EXIT_OK

    return _run(plan, body, log)


BUILDERS: Dict[str, Callable[..., ServiceResult]] = {
    "simulate": build_simulate_result,
    "sweep": build_sweep_result,
    "optimize": build_optimize_result,
    "denoise": build_denoise_result,
    "validate": build_validate_result,
}


def build_result(plan: RunPlan, log: Optional[logging.Logger] = None) -> ServiceResult:
    return BUILDERS[plan.command](plan, log)
