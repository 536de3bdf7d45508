"""Covariance models gamma(s, t) and risk measures mu on the observation window."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import RegularGridInterpolator

from ..exceptions import DomainError, NumericError, ValidationError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

PSD_TOLERANCE = 1e-10
QUADRATURE_RTOL = 1e-9
MAX_REFINEMENTS = 8
DEFAULT_QUADRATURE_POINTS = 1000


class CovarianceKind(str, Enum):
    ORNSTEIN_UHLENBECK = "ou"
    BROWNIAN_MOTION = "brownian"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class CovarianceModel:
    """Base class of every covariance model.

    Subclasses implement :meth:`_kernel` on already validated, broadcast
    arrays with ``s <= t`` elementwise, which makes symmetry exact.
    """

    horizon: float

    kind = None  # set by subclasses

    def __post_init__(self) -> None:
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise ValidationError({"horizon": "must be a finite time > 0"})

    @property
    def start(self) -> float:
        """First admissible observation time."""
        return 0.0

    @property
    def duration(self) -> float:
        return self.horizon - self.start

    @property
    def id(self) -> str:
        raise NotImplementedError

    @property
    def is_degenerate(self) -> bool:
        """True when the model carries no noise at all."""
        return False

    def _check_times(self, *times: np.ndarray) -> None:
        slack = 1e-12 * max(1.0, self.horizon)
        for values in times:
            if values.size == 0:
                continue
            if not np.all(np.isfinite(values)):
                raise DomainError("times must be finite")
            if values.min() < -slack or values.max() > self.horizon + slack:
                raise DomainError(
                    f"times must lie in [0, {self.horizon:g}], "
                    f"got range [{values.min():g}, {values.max():g}]"
                )

    def gamma(self, s: ArrayLike, t: ArrayLike) -> np.ndarray:
        s_arr, t_arr = np.broadcast_arrays(
            np.asarray(s, dtype=float), np.asarray(t, dtype=float)
        )
        self._check_times(s_arr, t_arr)
        lo = np.minimum(s_arr, t_arr)
        hi = np.maximum(s_arr, t_arr)
        return self._kernel(lo, hi)

    def variance(self, t: ArrayLike) -> np.ndarray:
        """Diagonal gamma(t, t)."""
        t_arr = np.asarray(t, dtype=float)
        return self.gamma(t_arr, t_arr)

    def gram(self, grid: ArrayLike) -> np.ndarray:
        grid = np.asarray(grid, dtype=float)
        return self.gamma(grid[:, None], grid[None, :])

    def _kernel(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def with_horizon(self, horizon: float) -> "CovarianceModel":
        raise NotImplementedError(f"{type(self).__name__} has a fixed horizon")


@dataclass(frozen=True)
class OrnsteinUhlenbeck(CovarianceModel):
    """Centered stationary OU process, gamma(s,t) = sigma^2/(2a) e^{-a|t-s|}.

    ``sigma = 0`` is accepted as the noiseless limit so that simulations can
    reproduce the drift exactly; risk functionals reject it.
    """

    horizon: float = 1.0
    a: float = 0.5
    sigma: float = 0.05

    kind = CovarianceKind.ORNSTEIN_UHLENBECK

    def __post_init__(self) -> None:
        super().__post_init__()
        problems = {}
        if not np.isfinite(self.a) or self.a <= 0:
            problems["a"] = "rate must be > 0"
        if not np.isfinite(self.sigma) or self.sigma < 0:
            problems["sigma"] = "noise scale must be >= 0"
        if problems:
            raise ValidationError(problems)

    @property
    def stationary_variance(self) -> float:
        return self.sigma**2 / (2.0 * self.a)

    @property
    def is_degenerate(self) -> bool:
        return self.sigma == 0

    @property
    def id(self) -> str:
        return f"ou(a={self.a!r},sigma={self.sigma!r},T={self.horizon!r})"

    def _kernel(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        return self.stationary_variance * np.exp(-self.a * (hi - lo))

    def with_horizon(self, horizon: float) -> "OrnsteinUhlenbeck":
        return OrnsteinUhlenbeck(horizon=horizon, a=self.a, sigma=self.sigma)


@dataclass(frozen=True)
class BrownianMotion(CovarianceModel):
    """Brownian motion, gamma(s,t) = sigma^2 min(s,t), observed on [t0, T].

    gamma(0,0) = 0, so paths start at an offset ``t0`` (default T/1000).
    """

    horizon: float = 1.0
    sigma: float = 1.0
    t0: Optional[float] = None

    kind = CovarianceKind.BROWNIAN_MOTION

    def __post_init__(self) -> None:
        super().__post_init__()
        problems = {}
        if not np.isfinite(self.sigma) or self.sigma <= 0:
            problems["sigma"] = "noise scale must be > 0"
        if self.t0 is not None and not 0 < self.t0 < self.horizon:
            problems["t0"] = "start offset must lie in (0, T)"
        if problems:
            raise ValidationError(problems)

    @property
    def start(self) -> float:
        return self.t0 if self.t0 is not None else self.horizon / 1000.0

    @property
    def id(self) -> str:
        return f"brownian(sigma={self.sigma!r},t0={self.start!r},T={self.horizon!r})"

    def _kernel(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        return self.sigma**2 * lo

    def with_horizon(self, horizon: float) -> "BrownianMotion":
        return BrownianMotion(horizon=horizon, sigma=self.sigma, t0=self.t0)


@dataclass(frozen=True)
class Tabulated(CovarianceModel):
    """Covariance values on a time grid, bilinearly interpolated in between."""

    horizon: float = field(init=False)
    times: Tuple[float, ...] = ()
    matrix: Tuple[Tuple[float, ...], ...] = ()

    kind = CovarianceKind.TABULATED

    def __init__(self, grid: ArrayLike, matrix: ArrayLike):
        grid_arr = np.asarray(grid, dtype=float)
        matrix_arr = np.asarray(matrix, dtype=float)
        problems = {}

        if grid_arr.ndim != 1 or grid_arr.size < 2:
            problems["grid"] = "needs at least two time points"
        elif np.any(np.diff(grid_arr) <= 0) or grid_arr[0] < 0:
            problems["grid"] = "must be strictly increasing and start at t >= 0"

        if matrix_arr.shape != (grid_arr.size, grid_arr.size):
            problems["matrix"] = "must be square with one row per grid time"
        elif not np.all(np.isfinite(matrix_arr)):
            problems["matrix"] = "values must be finite"
        elif not np.allclose(matrix_arr, matrix_arr.T, rtol=0.0, atol=1e-12):
            problems["matrix"] = "must be symmetric"
        if problems:
            raise ValidationError(problems)

        matrix_arr = 0.5 * (matrix_arr + matrix_arr.T)
        smallest = float(np.linalg.eigvalsh(matrix_arr).min())
        if smallest < -PSD_TOLERANCE:
            raise ValidationError(
                {"matrix": f"not positive semi-definite (min eigenvalue {smallest:.3e})"}
            )
        if np.any(np.diag(matrix_arr) <= 0):
            raise ValidationError({"matrix": "diagonal gamma(t,t) must be > 0"})

        object.__setattr__(self, "horizon", float(grid_arr[-1]))
        object.__setattr__(self, "times", tuple(grid_arr.tolist()))
        object.__setattr__(self, "matrix", tuple(map(tuple, matrix_arr.tolist())))
        object.__setattr__(
            self,
            "_interpolator",
            RegularGridInterpolator((grid_arr, grid_arr), matrix_arr, method="linear"),
        )
        object.__setattr__(
            self,
            "_digest",
            hashlib.sha256(grid_arr.tobytes() + matrix_arr.tobytes()).hexdigest()[:16],
        )
        CovarianceModel.__post_init__(self)

    @property
    def start(self) -> float:
        return self.times[0]

    @property
    def id(self) -> str:
        return f"tabulated(n={len(self.times)},sha={self._digest})"

    def _check_times(self, *times: np.ndarray) -> None:
        super()._check_times(*times)
        for values in times:
            if values.size and values.min() < self.start - 1e-12:
                raise DomainError(f"times must lie in [{self.start:g}, {self.horizon:g}]")

    def _kernel(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        lo = np.clip(lo, self.start, self.horizon)
        hi = np.clip(hi, self.start, self.horizon)
        points = np.stack([lo.ravel(), hi.ravel()], axis=-1)
        return self._interpolator(points).reshape(lo.shape)


def eval_gamma(model: CovarianceModel, s: ArrayLike, t: ArrayLike) -> Union[float, np.ndarray]:
    """Evaluate gamma(s, t); scalars in, scalar out."""

    values = model.gamma(s, t)
    return float(values) if values.ndim == 0 else values


class MeasureKind(str, Enum):
    DENSITY = "density"
    ATOMIC = "atomic"


@dataclass(frozen=True)
class RiskMeasure:
    name: str

    kind = None  # set by subclasses


@dataclass(frozen=True)
class Density(RiskMeasure):
    """mu(dt) = f(t) dt."""

    f: Callable[[np.ndarray], np.ndarray] = field(compare=False, default=None)
    canonical: bool = False

    kind = MeasureKind.DENSITY

    def __post_init__(self) -> None:
        if not callable(self.f):
            raise ValidationError({"f": "density must be callable"})

    def evaluate(self, t: ArrayLike) -> np.ndarray:
        t_arr = np.asarray(t, dtype=float)
        values = np.broadcast_to(np.asarray(self.f(t_arr), dtype=float), t_arr.shape)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValidationError({"f": f"density {self.name} must be finite and >= 0"})
        return values


@dataclass(frozen=True)
class Atomic(RiskMeasure):
    """mu = sum_i a_i delta_{t_i}."""

    times: Tuple[float, ...] = ()
    weights: Tuple[float, ...] = ()

    kind = MeasureKind.ATOMIC

    def __post_init__(self) -> None:
        problems = {}
        if len(self.times) != len(self.weights):
            problems["weights"] = "one weight per atom is required"
        elif not self.times:
            problems["times"] = "at least one atom is required"
        else:
            weights = np.asarray(self.weights, dtype=float)
            if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
                problems["weights"] = "atom weights must be strictly positive"
            if not np.all(np.isfinite(np.asarray(self.times, dtype=float))):
                problems["times"] = "atom times must be finite"
        if problems:
            raise ValidationError(problems)

    @classmethod
    def from_pairs(cls, atoms: Sequence[Tuple[float, float]], name: str = "atomic") -> "Atomic":
        times = tuple(float(t) for t, _ in atoms)
        weights = tuple(float(w) for _, w in atoms)
        return cls(name=name, times=times, weights=weights)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))


def canonical_measure(model: CovarianceModel) -> Density:
    """mu(dt) = gamma(t,t)^{-1} dt."""

    if model.is_degenerate:
        raise DomainError("the canonical measure needs a non-vanishing covariance")
    return Density(
        name=f"canonical[{model.id}]",
        f=lambda t: 1.0 / model.variance(t),
        canonical=True,
    )


def lebesgue() -> Density:
    return Density(name="lebesgue", f=lambda t: np.ones_like(t))


def _refine(grid: np.ndarray) -> np.ndarray:
    refined = np.empty(2 * grid.size - 1)
    refined[0::2] = grid
    refined[1::2] = 0.5 * (grid[:-1] + grid[1:])
    return refined


def integrate_density(
    integrand: Callable[[np.ndarray], np.ndarray],
    grid: np.ndarray,
    rtol: float = QUADRATURE_RTOL,
    max_refinements: int = MAX_REFINEMENTS,
) -> float:
    """Composite trapezoid on ``grid`` with Richardson extrapolation.

    The grid is refined by midpoint insertion until two successive
    extrapolated values agree to ``rtol``.
    """

    grid = np.asarray(grid, dtype=float)
    if grid.size < 2:
        return 0.0

    coarse = trapezoid(integrand(grid), grid)
    grid = _refine(grid)
    fine = trapezoid(integrand(grid), grid)
    estimate = fine + (fine - coarse) / 3.0
    tiny = np.finfo(float).tiny

    for level in range(1, max_refinements + 1):
        if abs(fine - coarse) <= rtol * max(abs(fine), tiny):
            return float(estimate)
        grid = _refine(grid)
        finer = trapezoid(integrand(grid), grid)
        refined = finer + (finer - fine) / 3.0
        if abs(refined - estimate) <= rtol * max(abs(refined), tiny):
            logger.debug("Quadrature converged after %d refinements", level + 1)
            return float(refined)
        coarse, fine, estimate = fine, finer, refined

    raise NumericError(
        f"quadrature did not converge to relative tolerance {rtol:g} "
        f"after {max_refinements} refinements"
    )


def default_quadrature_grid(model: CovarianceModel, size: int = DEFAULT_QUADRATURE_POINTS) -> np.ndarray:
    return np.linspace(model.start, model.horizon, size)


def baseline_risk(
    model: CovarianceModel,
    mu: RiskMeasure,
    grid: Optional[ArrayLike] = None,
) -> float:
    """Risk of the observation itself, the integral of gamma(t,t) against mu.

    Density measures are integrated on ``grid`` (the path grid when called
    from the risk estimators); atomic measures are summed exactly.
    """

    if isinstance(mu, Atomic):
        times = np.asarray(mu.times, dtype=float)
        return float(np.sum(model.variance(times) * np.asarray(mu.weights, dtype=float)))

    if not isinstance(mu, Density):
        raise TypeError(f"unsupported risk measure {type(mu).__name__}")

    nodes = default_quadrature_grid(model) if grid is None else np.asarray(grid, dtype=float)
    return integrate_density(lambda t: model.variance(t) * mu.evaluate(t), nodes)
