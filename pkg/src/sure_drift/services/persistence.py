"""CSV and text result files.

Every file starts with a ``# config_hash=<hash> seed=<seed>`` comment line;
readers skip it through ``comment="#"``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..exceptions import StorageError
from ..models.drift import DriftFunction
from ..models.path import PathMeta, SamplePath
from .montecarlo import McReport
from .optimize import TRACE_COLUMNS, OptimResult
from .pathstats import LocalTimeEstimate

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

PATH_FILE = "path.csv"
SURFACE_FILE = "surface.csv"
TRACE_FILE = "trace.csv"
LEVELS_FILE = "levels.csv"
DENOISED_FILE = "denoised.csv"
OPTIMUM_FILE = "optimum.txt"
REPORT_TEXT_FILE = "report.txt"
REPORT_CSV_FILE = "report.csv"

PATH_COLUMNS = ["t", "x", "u"]
LEVEL_COLUMNS = ["lambda", "occupation", "local_time"]
DENOISED_COLUMNS = ["t", "x_denoised"]


@dataclass(frozen=True)
class RunHeader:
    config_hash: str
    seed: int

    def line(self) -> str:
        return f"# config_hash={self.config_hash} seed={self.seed}\n"


def ensure_directory(directory: PathLike) -> Path:
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StorageError(f"cannot create output directory: {exc.strerror or exc}", path=str(directory)) from exc
    return directory


def _write_text(target: Path, text: str) -> Path:
    try:
        with target.open("w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    except OSError as exc:
        raise StorageError(f"cannot write result file: {exc.strerror or exc}", path=str(target)) from exc
    logger.info("Wrote %s", target)
    return target


def write_frame(directory: PathLike, name: str, frame: pd.DataFrame, header: RunHeader) -> Path:
    """Header line followed by ``frame`` without its index."""

    target = ensure_directory(directory) / name
    body = frame.to_csv(index=False, lineterminator="\n")
    return _write_text(target, header.line() + body)


def write_path(directory: PathLike, path: SamplePath, header: RunHeader) -> Path:
    drift = path.drift_values
    frame = pd.DataFrame(
        {
            "t": path.grid,
            "x": path.values,
            "u": drift if drift is not None else np.full(path.grid.shape, np.nan),
        },
        columns=PATH_COLUMNS,
    )
    return write_frame(directory, PATH_FILE, frame, header)


def read_path_csv(source: PathLike, note: str = "input") -> SamplePath:
    """Load a ``t,x[,u]`` file; the ``u`` column is kept when present."""

    source = Path(source)
    if not source.is_file():
        raise StorageError("input path file does not exist", path=str(source))
    try:
        frame = pd.read_csv(source, comment="#", float_precision="round_trip")
    except (OSError, ValueError) as exc:
        raise StorageError(f"cannot read input path file: {exc}", path=str(source)) from exc

    missing = [column for column in ("t", "x") if column not in frame.columns]
    if missing:
        raise StorageError(f"input path file is missing columns {missing}", path=str(source))

    grid = frame["t"].to_numpy(dtype=float)
    drift = None
    if "u" in frame.columns and frame["u"].notna().all():
        drift = DriftFunction.tabulated(grid, frame["u"].to_numpy(dtype=float))
    meta = PathMeta(model_id="file", method="file", drift=drift, note=note)
    return SamplePath(grid=grid, values=frame["x"].to_numpy(dtype=float), meta=meta)


def write_surface(directory: PathLike, surface: pd.DataFrame, header: RunHeader) -> Path:
    return write_frame(directory, SURFACE_FILE, surface[TRACE_COLUMNS], header)


def write_trace(directory: PathLike, result: OptimResult, header: RunHeader) -> Path:
    return write_frame(directory, TRACE_FILE, result.trace, header)


def write_levels(directory: PathLike, estimates: Sequence[LocalTimeEstimate], header: RunHeader) -> Path:
    frame = pd.DataFrame(
        [(e.level, e.occupation, e.local_time) for e in estimates],
        columns=LEVEL_COLUMNS,
    )
    return write_frame(directory, LEVELS_FILE, frame, header)


def write_denoised(directory: PathLike, estimate: SamplePath, header: RunHeader) -> Path:
    frame = pd.DataFrame({"t": estimate.grid, "x_denoised": estimate.values}, columns=DENOISED_COLUMNS)
    return write_frame(directory, DENOISED_FILE, frame, header)


def optimum_lines(result: OptimResult) -> List[Tuple[str, object]]:
    pairs: List[Tuple[str, object]] = [
        ("variant", result.variant),
        ("alpha_star", result.alpha_star),
        ("lambda_star", result.lambda_star),
        ("sure_min", result.sure_min),
    ]
    if result.grid_optimum is not None:
        pairs += [
            ("grid_alpha", result.grid_optimum.alpha),
            ("grid_lambda", result.grid_optimum.lam),
            ("grid_sure", result.grid_optimum.sure),
        ]
    pairs += [(f"gradient_{name}", value) for name, value in sorted(result.gradient_at_min.items())]
    pairs.append(("stationary", result.stationary))
    alternates = ";".join(f"{c.alpha!r}:{c.lam!r}:{c.sure!r}" for c in result.alternates)
    pairs.append(("alternates", alternates))
    return pairs


def write_optimum(
    directory: PathLike,
    result: OptimResult,
    header: RunHeader,
    extra: Optional[Iterable[Tuple[str, object]]] = None,
) -> Path:
    lines = [f"{key} = {float(value)!r}" if isinstance(value, float) else f"{key} = {value}"
             for key, value in list(optimum_lines(result)) + list(extra or [])]
    target = ensure_directory(directory) / OPTIMUM_FILE
    return _write_text(target, header.line() + "\n".join(lines) + "\n")


def read_optimum(source: PathLike) -> dict:
    """Parse ``key = value`` lines back into strings."""

    entries = {}
    for line in Path(source).read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(" = ")
        entries[key] = value
    return entries


def write_report(directory: PathLike, report: McReport, header: RunHeader) -> Tuple[Path, Path]:
    text_path = _write_text(ensure_directory(directory) / REPORT_TEXT_FILE, header.line() + report.to_text())
    csv_path = write_frame(directory, REPORT_CSV_FILE, report.to_frame(), header)
    return text_path, csv_path
