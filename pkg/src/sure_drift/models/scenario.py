"""Scenario file schema.

Every section forbids unknown keys: a typo in an experiment file is an
error, never a silently ignored setting.
"""

from __future__ import annotations

import hashlib
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic import ValidationError as PydanticValidationError

from ..exceptions import ConfigError

ScenarioName = Literal["simple", "level", "slope", "custom"]
CommandName = Literal["simulate", "sweep", "optimize", "denoise", "validate"]
StatisticName = Literal["unbiasedness", "risk_bound", "coverage", "baseline_efficiency"]

COMMANDS = ("simulate", "sweep", "optimize", "denoise", "validate")
DEFAULT_OUTPUT_DIR = "sure-output"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelSection(_Section):
    kind: Literal["ou", "brownian", "tabulated"] = Field(
        "ou", description="Covariance family."
    )
    a: float = Field(0.5, gt=0, description="OU mean-reversion rate.")
    sigma: float = Field(0.05, ge=0, description="Noise scale.")
    horizon: float = Field(1.0, gt=0, description="Observation horizon T.")
    t0: Optional[float] = Field(None, gt=0, description="Brownian start offset, T/1000 when unset.")
    grid: Optional[List[float]] = Field(None, description="Tabulated covariance times.")
    matrix: Optional[List[List[float]]] = Field(None, description="Tabulated covariance values.")

    @model_validator(mode="after")
    def _tabulated_needs_values(self) -> "ModelSection":
        if self.kind == "tabulated" and (self.grid is None or self.matrix is None):
            raise ValueError("tabulated models need both 'grid' and 'matrix'")
        return self


class GridSection(_Section):
    size: int = Field(1000, ge=1, description="Number of grid points.")
    start: Optional[float] = Field(
        None,
        ge=0,
        description="First grid time; defaults to the model start (T/1000 for slope runs).",
    )


class DriftSection(_Section):
    kind: Literal["zero", "constant", "linear", "tabulated", "expression"] = "zero"
    value: float = 0.0
    name: Optional[Literal["simple", "level", "slope"]] = None
    times: Optional[List[float]] = None
    values: Optional[List[float]] = None

    @model_validator(mode="after")
    def _check_parameters(self) -> "DriftSection":
        if self.kind == "expression" and self.name is None:
            raise ValueError("expression drifts need a scenario 'name'")
        if self.kind == "tabulated" and (self.times is None or self.values is None):
            raise ValueError("tabulated drifts need both 'times' and 'values'")
        return self


class AlphaSection(_Section):
    variant: Literal["fixed", "level", "slope"] = "fixed"
    value: float = Field(0.0, description="Centre used by the fixed variant.")


class SearchSection(_Section):
    r: float = Field(1.01, gt=0, description="Exponent of the sqrt(2 r log T) range.")
    floor: float = Field(3.0, gt=0, description="Upper lambda bound used when T <= 1.")
    lambda_max: Optional[float] = Field(None, gt=0, description="Explicit upper lambda bound.")
    n_lambda: int = Field(200, ge=2)
    n_alpha: int = Field(60, ge=2)
    n_lambda_joint: int = Field(60, ge=2)
    alpha_min: Optional[float] = None
    alpha_max: Optional[float] = None
    refine: bool = True


class ThresholdSection(_Section):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    kind: Literal["soft", "hard"] = "soft"
    lam: float = Field(1.0, ge=0, alias="lambda")
    alpha: float = 0.0
    variant: Literal["level", "slope"] = "level"


class InputSection(_Section):
    path: Optional[str] = Field(None, description="CSV with columns t,x[,u] to use instead of simulating.")


class OutputSection(_Section):
    directory: Optional[str] = None


class ValidationSection(_Section):
    n_reps: int = Field(400, description="Replicates per statistic, at least 2.")
    seed_base: int = Field(0, ge=0)
    statistics: List[StatisticName] = Field(
        default_factory=lambda: ["unbiasedness", "risk_bound", "coverage", "baseline_efficiency"]
    )
    lambdas: List[float] = Field(default_factory=lambda: [0.3, 1.0])
    hard_lambda: Optional[float] = Field(None, ge=0)
    bound_lambdas: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    alpha: float = 0.0
    horizons: List[float] = Field(default_factory=lambda: [10.0, 100.0, 1000.0])
    r: float = Field(1.5, gt=0)
    coverage_reps: int = Field(300)
    measure: Literal["canonical", "lebesgue"] = "canonical"


class ScenarioConfig(_Section):
    scenario: ScenarioName = "simple"
    command: CommandName = "optimize"
    seed: int = Field(0, ge=0, lt=2**64)
    model: ModelSection = Field(default_factory=ModelSection)
    grid: GridSection = Field(default_factory=GridSection)
    drift: Optional[DriftSection] = None
    alpha: Optional[AlphaSection] = None
    search: SearchSection = Field(default_factory=SearchSection)
    threshold: ThresholdSection = Field(default_factory=ThresholdSection)
    input: InputSection = Field(default_factory=InputSection)
    output: OutputSection = Field(default_factory=OutputSection)
    validation: ValidationSection = Field(default_factory=ValidationSection)

    @model_validator(mode="after")
    def _custom_needs_drift(self) -> "ScenarioConfig":
        if self.scenario == "custom" and self.drift is None:
            raise ValueError("the custom scenario needs a 'drift' section")
        return self

    @property
    def alpha_variant(self) -> str:
        if self.alpha is not None:
            return self.alpha.variant
        return {"simple": "fixed", "level": "level", "slope": "slope"}.get(self.scenario, "fixed")


class RunPlan(_Section):
    """A scenario with every override applied; the unit that gets hashed."""

    config: ScenarioConfig
    seed: int = Field(ge=0, lt=2**64)
    command: CommandName
    output_dir: str
    workers: int = Field(1, ge=1)

    @property
    def config_hash(self) -> str:
        payload = self.model_dump_json(exclude={"output_dir", "workers"})
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def resolve_plan(
    config: ScenarioConfig,
    seed: Optional[int] = None,
    output_dir: Optional[str] = None,
    command: Optional[str] = None,
    env_seed: Optional[int] = None,
    env_output_dir: Optional[str] = None,
    workers: int = 1,
) -> RunPlan:
    """Apply flag > environment > file precedence and freeze the result."""

    if seed is not None:
        effective_seed = seed
    elif env_seed is not None:
        effective_seed = env_seed
    else:
        effective_seed = config.seed

    effective_dir = output_dir or env_output_dir or config.output.directory or DEFAULT_OUTPUT_DIR

    try:
        return RunPlan(
            config=config,
            seed=effective_seed,
            command=command or config.command,
            output_dir=str(effective_dir),
            workers=workers,
        )
    except PydanticValidationError as exc:
        raise ConfigError(f"invalid run plan: {exc.errors()[0]['msg']}") from exc
