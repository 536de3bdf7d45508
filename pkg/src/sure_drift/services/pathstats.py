"""Occupation times and local times of standardized paths.

All time integrals are taken over the piecewise-linear interpolant of the
sampled values, so level crossings inside a grid cell are located exactly
instead of being rounded to whole cells.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from ..exceptions import DomainError, NumericError
from ..models.covariance import CovarianceModel
from ..models.drift import DriftFunction
from ..models.path import SamplePath

logger = logging.getLogger(__name__)

LevelFunction = Union[float, np.ndarray, Callable[[np.ndarray], np.ndarray]]

BERMAN_EXPONENT = 0.5
BERMAN_CELLS = 512
BERMAN_BANDS = (8, 16, 32, 64)
BERMAN_RATIO_LIMIT = 0.85
DEGENERATE_INCREMENT = 1e-14
BANDWIDTH_FRACTION = 0.1


@dataclass(frozen=True, eq=False)
class StandardizedPath:
    """Z_t = (X_t - alpha(t)) / sqrt(gamma(t,t)) on the path grid."""

    grid: np.ndarray
    z: np.ndarray
    source: Optional[SamplePath] = None
    alpha: Optional[DriftFunction] = None

    def __post_init__(self) -> None:
        grid = np.array(self.grid, dtype=float).ravel()
        z = np.array(self.z, dtype=float).ravel()
        if grid.size == 0 or grid.size != z.size:
            raise DomainError("standardized path needs one value per grid time")
        if not np.all(np.isfinite(z)):
            raise NumericError("standardized values must be finite")
        grid.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "z", z)

    @classmethod
    def from_values(cls, grid: Sequence[float], z: Sequence[float]) -> "StandardizedPath":
        return cls(np.asarray(grid, dtype=float), np.asarray(z, dtype=float))

    @property
    def duration(self) -> float:
        return float(self.grid[-1] - self.grid[0])


@dataclass(frozen=True)
class LocalTimeEstimate:
    level: float
    occupation: float
    local_time: float
    bandwidth: float
    wide_bandwidth: bool = False


def standardize(path: SamplePath, alpha: DriftFunction, model: CovarianceModel) -> StandardizedPath:
    variance = model.variance(path.grid)
    if np.any(variance <= 0):
        raise NumericError(f"gamma(t,t) vanishes on the grid for {model.id}")
    z = (path.values - alpha(path.grid)) / np.sqrt(variance)
    return StandardizedPath(path.grid, z, source=path, alpha=alpha)


def default_bandwidth(values: np.ndarray) -> float:
    """A tenth of the median absolute increment between grid points.

    Paths that never move fall back to 2 * std * n^(-1/5) with unit scale.
    """

    values = np.asarray(values, dtype=float)
    if values.size > 1:
        step = float(np.median(np.abs(np.diff(values))))
        if step > 0.0:
            return BANDWIDTH_FRACTION * step
    scale = float(np.std(values))
    if scale == 0.0:
        scale = 1.0
    return 2.0 * scale * values.size ** (-0.2)


def _crossing_interval(
    v0: np.ndarray, v1: np.ndarray, lower: float, upper: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Fractions [lo, hi] of each cell where lower <= v <= upper."""

    dv = v1 - v0
    moving = dv != 0
    safe = np.where(moving, dv, 1.0)
    with np.errstate(invalid="ignore"):
        first = (lower - v0) / safe
        second = (upper - v0) / safe
    lo = np.clip(np.minimum(first, second), 0.0, 1.0)
    hi = np.clip(np.maximum(first, second), 0.0, 1.0)
    inside_flat = (v0 >= lower) & (v0 <= upper)
    lo = np.where(moving, lo, 0.0)
    hi = np.where(moving, np.maximum(hi, lo), inside_flat.astype(float))
    return lo, hi


def _occupation(grid: np.ndarray, values: np.ndarray, lower: float, upper: float) -> float:
    if grid.size < 2:
        return 0.0
    lo, hi = _crossing_interval(values[:-1], values[1:], lower, upper)
    return float(np.sum(np.diff(grid) * (hi - lo)))


def occupation_time(path: StandardizedPath, lam: float) -> float:
    """Time spent by Z in [-lam, lam]."""

    if lam < 0:
        raise DomainError("lambda must be >= 0")
    return _occupation(path.grid, path.z, -lam, lam)


def occupation_below(grid: np.ndarray, values: np.ndarray, level: float) -> float:
    """Time spent by the interpolated values at or below ``level``."""

    return _occupation(np.asarray(grid, dtype=float), np.asarray(values, dtype=float), -np.inf, level)


def _inside_pieces(path: StandardizedPath, lam: float):
    z0, z1 = path.z[:-1], path.z[1:]
    lo, hi = _crossing_interval(z0, z1, -lam, lam)
    dz = z1 - z0
    length = np.diff(path.grid) * (hi - lo)
    return lo, hi, z0 + lo * dz, z0 + hi * dz, length


def band_square(path: StandardizedPath, lam: float) -> float:
    """Integral of Z^2 over the times where |Z| <= lam."""

    if lam < 0:
        raise DomainError("lambda must be >= 0")
    if path.grid.size < 2:
        return 0.0
    _, _, z_lo, z_hi, length = _inside_pieces(path, lam)
    return float(np.sum(length * (z_lo**2 + z_lo * z_hi + z_hi**2)) / 3.0)


def truncated_square(path: StandardizedPath, lam: float) -> float:
    """Integral of min(|Z|, lam)^2."""

    outside = path.duration - occupation_time(path, lam)
    return band_square(path, lam) + lam**2 * max(outside, 0.0)


def band_weighted(path: StandardizedPath, lam: float, weight: np.ndarray) -> float:
    """Integral of Z * c over the times where |Z| <= lam, c given on the nodes."""

    if path.grid.size < 2:
        return 0.0
    weight = np.asarray(weight, dtype=float)
    lo, hi, z_lo, z_hi, length = _inside_pieces(path, lam)
    dc = weight[1:] - weight[:-1]
    c_lo = weight[:-1] + lo * dc
    c_hi = weight[:-1] + hi * dc
    pieces = 2.0 * z_lo * c_lo + z_lo * c_hi + z_hi * c_lo + 2.0 * z_hi * c_hi
    return float(np.sum(length * pieces) / 6.0)


def local_time(path: StandardizedPath, lam: float, bandwidth: Optional[float] = None) -> LocalTimeEstimate:
    """Local time of |Z| at ``lam`` by a central difference of the occupation time.

    Near zero the lower level is clamped at 0 and the divisor shrinks to the
    actual gap.
    """

    if lam < 0:
        raise DomainError("lambda must be >= 0")
    eps = default_bandwidth(path.z) if bandwidth is None else float(bandwidth)
    if not eps > 0:
        raise DomainError("bandwidth must be > 0")

    upper = lam + eps
    lower = max(0.0, lam - eps)
    density = (occupation_time(path, upper) - occupation_time(path, lower)) / (upper - lower)

    magnitudes = np.abs(path.z)
    spread = float(magnitudes.max() - magnitudes.min())
    wide = eps > spread
    if wide:
        logger.warning(
            "Local-time bandwidth %.4g exceeds the level range %.4g of the path", eps, spread
        )

    return LocalTimeEstimate(
        level=float(lam),
        occupation=occupation_time(path, lam),
        local_time=max(density, 0.0),
        bandwidth=eps,
        wide_bandwidth=wide,
    )


def occupation_curve(
    path: StandardizedPath,
    levels: Sequence[float],
    bandwidth: Optional[float] = None,
) -> List[LocalTimeEstimate]:
    eps = default_bandwidth(path.z) if bandwidth is None else bandwidth
    return [local_time(path, float(level), eps) for level in levels]


def _evaluate(fn: LevelFunction, grid: np.ndarray) -> np.ndarray:
    """Callables are applied to the grid; scalars and node arrays are broadcast."""

    values = fn(grid) if callable(fn) else fn
    try:
        return np.broadcast_to(np.asarray(values, dtype=float), grid.shape)
    except ValueError as error:
        raise DomainError(f"level values do not match the grid of {grid.size} points") from error


def signed_local_time(
    path: SamplePath,
    level_fn: LevelFunction,
    weight_fn: LevelFunction = 1.0,
    bandwidth: Optional[float] = None,
) -> float:
    """Local time at 0 of Y_t = (X_t - level(t)) * weight(t).

    With level alpha - lam*sqrt(gamma) and unit weight this is the local
    time at alpha of X + lam*sqrt(gamma); a 1/t weight gives the slope form.
    The occupation of {Y <= +-eps} is measured on the interpolant of
    X - level -+ eps / weight, which moves with alpha exactly like the
    standardized path does.
    """

    grid = path.grid
    offset = path.values - _evaluate(level_fn, grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = _evaluate(weight_fn, grid)
        transformed = offset * weight
        shift = 1.0 / weight
    if not (np.all(np.isfinite(transformed)) and np.all(np.isfinite(shift))):
        raise DomainError("level process is not finite on the grid; 1/t weights need grid[0] > 0")
    if np.any(weight <= 0):
        raise DomainError("weight must be positive on the grid")

    eps = default_bandwidth(transformed) if bandwidth is None else float(bandwidth)
    if not eps > 0:
        raise DomainError("bandwidth must be > 0")
    above = occupation_below(grid, offset - eps * shift, 0.0)
    below = occupation_below(grid, offset + eps * shift, 0.0)
    return max((above - below) / (2.0 * eps), 0.0)


def incremental_variance(model: CovarianceModel, s, t) -> np.ndarray:
    """Delta(s,t) = 2 - 2 gamma(s,t) / sqrt(gamma(s,s) gamma(t,t))."""

    correlation = model.gamma(s, t) / np.sqrt(model.variance(s) * model.variance(t))
    return np.clip(2.0 - 2.0 * correlation, 0.0, None)


@dataclass(frozen=True)
class BermanReport:
    exponent: float
    bands: Tuple[float, ...]
    estimates: Tuple[float, ...]
    increments: Tuple[float, ...]
    ratios: Tuple[float, ...]
    verdict: str
    alpha: str = ""
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def likely_finite(self) -> bool:
        return self.verdict == "likely-finite"


def check_berman(
    model: CovarianceModel,
    alpha: Optional[DriftFunction] = None,
    exponent: float = BERMAN_EXPONENT,
    cells: int = BERMAN_CELLS,
) -> BermanReport:
    """Estimate the double integral of Delta^(-p) off a shrinking diagonal band.

    Delta does not depend on a deterministic centering, so ``alpha`` is only
    recorded. The integral is likely finite when the contribution of each
    halved band decays geometrically.
    """

    step = model.duration / cells
    centres = model.start + (np.arange(cells) + 0.5) * step
    delta = incremental_variance(model, centres[:, None], centres[None, :])
    with np.errstate(divide="ignore"):
        integrand = np.where(delta > DEGENERATE_INCREMENT, delta ** (-exponent), np.inf)

    offsets = np.abs(np.arange(cells)[:, None] - np.arange(cells)[None, :])
    bands = tuple(model.duration / divisor for divisor in BERMAN_BANDS)
    estimates = []
    for band in bands:
        mask = offsets >= max(1, int(round(band / step)))
        estimates.append(float(np.sum(integrand[mask]) * step**2))

    notes = []
    if all(np.isfinite(estimates)):
        increments = tuple(float(b - a) for a, b in zip(estimates, estimates[1:]))
        ratios = tuple(
            (later / earlier) if earlier > 0 else 0.0
            for earlier, later in zip(increments, increments[1:])
        )
        finite = all(ratio < BERMAN_RATIO_LIMIT for ratio in ratios)
    else:
        increments, ratios, finite = (), (), False
        notes.append("incremental variance vanishes off the diagonal")

    verdict = "likely-finite" if finite else "likely-divergent"
    logger.debug("Berman check for %s with exponent %.2f: %s", model.id, exponent, verdict)
    return BermanReport(
        exponent=exponent,
        bands=bands,
        estimates=tuple(estimates),
        increments=increments,
        ratios=ratios,
        verdict=verdict,
        alpha=alpha.describe() if alpha is not None else "",
        notes=tuple(notes),
    )


def occupation_density_check(
    path: StandardizedPath,
    f: Callable[[np.ndarray], np.ndarray],
    level_grid: Sequence[float],
) -> float:
    """|int f(|Z_t|) dt - int f(a) lbar(a) da| with the module's own estimators.

    Each level owns the cell between the midpoints to its neighbours; the
    level integral sums f(level) times the occupation gained across the cell.
    """

    levels = np.asarray(level_grid, dtype=float).ravel()
    if levels.size == 0 or levels[0] < 0 or np.any(np.diff(levels) <= 0):
        raise DomainError("level grid must be non-negative and strictly increasing")

    if levels.size > 1:
        last_edge = levels[-1] + 0.5 * (levels[-1] - levels[-2])
    else:
        last_edge = 2.0 * levels[-1]
    edges = np.concatenate([[0.0], 0.5 * (levels[:-1] + levels[1:]), [last_edge]])

    magnitudes = np.abs(path.z)
    if last_edge < magnitudes.max():
        raise DomainError(
            f"level grid ends at {last_edge:g} but |Z| reaches {magnitudes.max():g}"
        )

    occupations = np.array([occupation_time(path, edge) for edge in edges])
    level_side = float(np.sum(_evaluate(f, levels) * np.diff(occupations)))
    time_side = float(trapezoid(_evaluate(f, magnitudes), path.grid)) if path.grid.size > 1 else 0.0
    return abs(time_side - level_side)
