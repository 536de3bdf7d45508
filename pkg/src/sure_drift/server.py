"""Smithery FastMCP server entrypoint."""

from __future__ import annotations

from typing import Literal, Optional

from mcp.server.fastmcp import Context, FastMCP
from pydantic import BaseModel, Field
from smithery.decorators import smithery

from sure_drift.config import get_config
from sure_drift.exceptions import ConfigError
from sure_drift.models.scenario import DEFAULT_OUTPUT_DIR, ScenarioConfig, SearchSection, resolve_plan
from sure_drift.routes.experiments import ServiceResult, build_result

ScenarioName = Literal["simple", "level", "slope"]


class SessionConfig(BaseModel):
    """Session-level configuration exposed to Smithery clients."""

    default_scenario: ScenarioName = Field(
        "simple",
        description="Scenario used when a tool call does not name one.",
    )
    default_seed: int = Field(
        0,
        ge=0,
        description="Seed used when a tool call does not pass one.",
    )
    output_directory: str = Field(
        DEFAULT_OUTPUT_DIR,
        description="Directory the result files are written to.",
    )


def _session(ctx: Optional[Context]) -> SessionConfig:
    session_config = getattr(ctx, "session_config", None) if ctx is not None else None
    return session_config or SessionConfig()


def _run(
    command: str,
    ctx: Optional[Context],
    scenario: Optional[str],
    seed: Optional[int],
    refine: Optional[bool] = None,
) -> dict:
    session_config = _session(ctx)
    try:
        env = get_config()
        config = ScenarioConfig(scenario=scenario or session_config.default_scenario)
        if refine is not None:
            config = config.model_copy(update={"search": SearchSection(refine=refine)})
        plan = resolve_plan(
            config,
            seed=seed if seed is not None else session_config.default_seed,
            output_dir=session_config.output_directory,
            command=command,
            workers=env.SURE_WORKERS,
        )
    except (ConfigError, ValueError) as error:
        raise RuntimeError(str(error)) from error

    result: ServiceResult = build_result(plan)
    if not result.ok:
        message = result.payload.get("error") or f"{command} failed for scenario {plan.config.scenario}"
        raise RuntimeError(message)
    return result.payload


@smithery.server(config_schema=SessionConfig)
def create_server() -> FastMCP:
    """Create and configure the FastMCP server used by Smithery deployments."""

    server = FastMCP(name="SURE Drift Estimation Server")

    @server.tool()
    def simulate_path(ctx: Context, scenario: Optional[str] = None, seed: Optional[int] = None) -> dict:
        """Simulate a scenario path and write path.csv."""

        return _run("simulate", ctx, scenario, seed)

    @server.tool()
    def sweep_risk(ctx: Context, scenario: Optional[str] = None, seed: Optional[int] = None) -> dict:
        """Evaluate the SURE surface over the default search grid."""

        return _run("sweep", ctx, scenario, seed)

    @server.tool()
    def optimize_threshold(
        ctx: Context,
        scenario: Optional[str] = None,
        seed: Optional[int] = None,
        refine: Optional[bool] = None,
    ) -> dict:
        """Find the SURE-minimising centre and threshold and write the denoised path."""

        return _run("optimize", ctx, scenario, seed, refine)

    return server
