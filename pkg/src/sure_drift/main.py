import json
import logging
import os
from pathlib import Path
from typing import Optional

import click

from sure_drift.config import get_config, load_scenario
from sure_drift.exceptions import ConfigError
from sure_drift.models.scenario import COMMANDS, ScenarioConfig, resolve_plan
from sure_drift.routes.experiments import EXIT_OK, EXIT_USAGE, build_result

_LOG_LEVELS = {
    'CRITICAL': logging.CRITICAL,
    'ERROR': logging.ERROR,
    'WARNING': logging.WARNING,
    'INFO': logging.INFO,
    'DEBUG': logging.DEBUG,
    'NOTSET': logging.NOTSET,
}

MAX_SEED = 2**64 - 1


def configure_logging():
    """Configure application logging once, respecting existing handlers."""
    root_logger = logging.getLogger()
    if root_logger.handlers:
        return

    level_name = os.getenv('APP_LOG_LEVEL', 'INFO').upper()
    level = _LOG_LEVELS.get(level_name, logging.INFO)

    logging.basicConfig(
        level=level,
        format='%(asctime)s %(levelname)s [%(name)s] %(message)s',
    )

configure_logging()

logger = logging.getLogger(__name__)


@click.command(context_settings={'help_option_names': ['-h', '--help']})
@click.option(
    '--config',
    'config_path',
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help='YAML scenario file. Built-in defaults are used when omitted.',
)
@click.option('--seed', type=click.IntRange(0, MAX_SEED), default=None, help='Overrides SURE_SEED and the file seed.')
@click.option('--out', 'output_dir', type=click.Path(file_okay=False), default=None, help='Output directory.')
@click.option('--command', type=click.Choice(COMMANDS), default=None, help='Command to run.')
def cli(config_path: Optional[Path], seed: Optional[int], output_dir: Optional[str], command: Optional[str]) -> None:
    """Estimate the drift of a Gaussian process by SURE-tuned thresholding."""

    try:
        env = get_config()
        scenario = load_scenario(config_path) if config_path is not None else ScenarioConfig()
        plan = resolve_plan(
            scenario,
            seed=seed,
            output_dir=output_dir,
            command=command,
            env_seed=env.SURE_SEED,
            env_output_dir=env.SURE_OUT,
            workers=env.SURE_WORKERS,
        )
    except ConfigError as error:
        raise click.UsageError(str(error)) from error

    logger.info('Running %s for scenario %s (seed=%d, hash=%s)', plan.command, plan.config.scenario, plan.seed,
                plan.config_hash)
    result = build_result(plan)

    if result.exit_code == EXIT_USAGE:
        raise click.UsageError(result.payload.get('error', 'invalid arguments'))

    click.echo(json.dumps(result.payload, indent=2, sort_keys=True, default=float))
    if result.exit_code != EXIT_OK:
        if 'error' in result.payload:
            click.echo(f"Error: {result.payload['error']}", err=True)
        click.get_current_context().exit(result.exit_code)
    logger.info('Finished %s', plan.command)


if __name__ == '__main__':
    cli()
