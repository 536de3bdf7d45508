"""Seeded samplers for drifted Gaussian processes X_t = u_t + X^u_t."""

from __future__ import annotations

import logging
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Hashable, Optional, Sequence, Union

import numpy as np
from scipy import linalg
from scipy.integrate import trapezoid

from ..exceptions import DomainError, NumericError, ValidationError
from ..models.covariance import CovarianceModel, OrnsteinUhlenbeck
from ..models.drift import DriftFunction
from ..models.path import PathMeta, SamplePath

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 1000
CHOLESKY_JITTER = 1e-10
MAX_SEED = 2**64 - 1

GridLike = Union[Sequence[float], np.ndarray]


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox generator keyed by an unsigned 64-bit seed."""

    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ValidationError({"seed": "must be an integer"})
    if not 0 <= int(seed) <= MAX_SEED:
        raise ValidationError({"seed": "must be an unsigned 64-bit integer"})
    return np.random.Generator(np.random.Philox(int(seed)))


def make_grid(model: CovarianceModel, size: int = DEFAULT_GRID_SIZE, start: Optional[float] = None) -> np.ndarray:
    """Uniform grid of ``size`` points ending at the model horizon."""

    if size < 1:
        raise DomainError("grid size must be at least 1")
    first = model.start if start is None else float(start)
    if not model.start - 1e-12 <= first < model.horizon and size > 1:
        raise DomainError(
            f"grid start {first:g} must lie in [{model.start:g}, {model.horizon:g})"
        )
    if size == 1:
        return np.array([model.horizon])
    return np.linspace(first, model.horizon, size)


def validate_grid(model: CovarianceModel, grid: GridLike) -> np.ndarray:
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise DomainError("grid must not be empty")
    if not np.all(np.isfinite(grid)) or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be finite and strictly increasing")
    if grid[0] < model.start - 1e-12:
        raise DomainError(f"grid starts before the model start {model.start:g}")
    if abs(grid[-1] - model.horizon) > 1e-12 * max(1.0, model.horizon):
        raise DomainError(f"grid must end at the horizon T={model.horizon:g}")
    return grid


class _FactorCache:
    """Small thread-safe LRU cache for matrix factorisations."""

    def __init__(self, max_entries: int = 8):
        self._entries: "OrderedDict[Hashable, object]" = OrderedDict()
        self._lock = threading.Lock()
        self._max_entries = max_entries

    def get_or_compute(self, key: Hashable, compute: Callable[[], object]) -> object:
        with self._lock:
            if key in self._entries:
                self._entries.move_to_end(key)
                return self._entries[key]
        value = compute()
        with self._lock:
            self._entries[key] = value
            self._entries.move_to_end(key)
            while len(self._entries) > self._max_entries:
                self._entries.popitem(last=False)
        return value

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()


_cholesky_cache = _FactorCache()
_spectrum_cache = _FactorCache()


def _meta(model: CovarianceModel, drift: DriftFunction, seed: int, method: str) -> PathMeta:
    return PathMeta(model_id=model.id, seed=int(seed), method=method, drift=drift)


def simulate_ou(model: OrnsteinUhlenbeck, drift: DriftFunction, grid: GridLike, seed: int) -> SamplePath:
    """Exact stationary OU sampling through its AR(1) recursion."""

    if not isinstance(model, OrnsteinUhlenbeck):
        raise TypeError(f"simulate_ou needs an OrnsteinUhlenbeck model, got {type(model).__name__}")
    grid = validate_grid(model, grid)
    rng = make_rng(seed)

    shocks = rng.standard_normal(grid.size)
    variance = model.stationary_variance
    rho = np.exp(-model.a * np.diff(grid))
    innovation_sd = np.sqrt(variance * -np.expm1(-2.0 * model.a * np.diff(grid)))

    noise = np.empty(grid.size)
    noise[0] = np.sqrt(variance) * shocks[0]
    for i in range(1, grid.size):
        noise[i] = rho[i - 1] * noise[i - 1] + innovation_sd[i - 1] * shocks[i]

    return SamplePath(grid, drift(grid) + noise, _meta(model, drift, seed, "ou-exact"))


def _cholesky_factor(model: CovarianceModel, grid: np.ndarray) -> np.ndarray:
    def compute() -> np.ndarray:
        gram = model.gram(grid)
        try:
            return linalg.cholesky(gram, lower=True)
        except linalg.LinAlgError:
            jitter = CHOLESKY_JITTER * max(float(np.max(np.diag(gram))), 1.0)
            logger.warning("Gram matrix not positive definite, retrying with jitter %.1e", jitter)
            try:
                return linalg.cholesky(gram + jitter * np.eye(grid.size), lower=True)
            except linalg.LinAlgError as exc:
                raise NumericError(
                    f"Cholesky factorisation failed for {model.id} on {grid.size} points"
                ) from exc

    return _cholesky_cache.get_or_compute((model.id, grid.tobytes()), compute)


def simulate_cholesky(model: CovarianceModel, drift: DriftFunction, grid: GridLike, seed: int) -> SamplePath:
    """General exact sampler: drift + L z with L L^T the Gram matrix."""

    grid = validate_grid(model, grid)
    rng = make_rng(seed)
    if model.is_degenerate:
        noise = np.zeros(grid.size)
    else:
        factor = _cholesky_factor(model, grid)
        noise = factor @ rng.standard_normal(grid.size)
    return SamplePath(grid, drift(grid) + noise, _meta(model, drift, seed, "cholesky"))


def quadrature_weights(grid: np.ndarray) -> np.ndarray:
    """Trapezoid weights of ``grid`` (unit weight for a single point)."""

    if grid.size == 1:
        return np.ones(1)
    steps = np.diff(grid)
    weights = np.zeros(grid.size)
    weights[:-1] += 0.5 * steps
    weights[1:] += 0.5 * steps
    return weights


@dataclass(frozen=True)
class KLSpectrum:
    """Nystrom discretisation of the covariance operator under Lebesgue measure.

    ``basis[:, k]`` holds h_k on the grid, orthonormal for the trapezoid
    inner product; ``eigenvalues`` are sorted in decreasing order.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray

    def captured_variance(self, n_terms: int) -> float:
        total = float(np.sum(self.eigenvalues))
        if total == 0.0:
            return 1.0
        return float(np.sum(self.eigenvalues[:n_terms]) / total)

    def covariance(self, n_terms: int) -> np.ndarray:
        head = self.basis[:, :n_terms]
        return (head * self.eigenvalues[:n_terms]) @ head.T


def kl_spectrum(model: CovarianceModel, grid: GridLike) -> KLSpectrum:
    grid = validate_grid(model, grid)

    def compute() -> KLSpectrum:
        root = np.sqrt(quadrature_weights(grid))
        operator = root[:, None] * model.gram(grid) * root[None, :]
        try:
            eigenvalues, vectors = linalg.eigh(operator)
        except linalg.LinAlgError as exc:
            raise NumericError(f"eigendecomposition failed for {model.id}") from exc
        order = np.argsort(eigenvalues)[::-1]
        eigenvalues = np.clip(eigenvalues[order], 0.0, None)
        basis = vectors[:, order] / root[:, None]
        return KLSpectrum(eigenvalues=eigenvalues, basis=basis)

    return _spectrum_cache.get_or_compute((model.id, grid.tobytes()), compute)


def kl_covariance(model: CovarianceModel, grid: GridLike, n_terms: int) -> np.ndarray:
    """Covariance matrix of the expansion truncated after ``n_terms`` terms."""

    return kl_spectrum(model, grid).covariance(n_terms)


def captured_variance(model: CovarianceModel, grid: GridLike, n_terms: int) -> float:
    return kl_spectrum(model, grid).captured_variance(n_terms)


def simulate_kl(
    model: CovarianceModel,
    drift: DriftFunction,
    grid: GridLike,
    n_terms: int,
    seed: int,
) -> SamplePath:
    """Truncated Karhunen-Loeve sampling.

    Dropping terms removes the variance of the discarded eigenvalues, so a
    truncated path is biased towards smaller fluctuations; see
    :func:`captured_variance`.
    """

    if n_terms < 1:
        raise DomainError("n_terms must be at least 1")
    grid = validate_grid(model, grid)
    if n_terms > grid.size:
        logger.warning(
            "Requested %d KL terms on a %d point grid; using %d", n_terms, grid.size, grid.size
        )
        n_terms = grid.size

    spectrum = kl_spectrum(model, grid)
    rng = make_rng(seed)
    scores = rng.standard_normal(n_terms) * np.sqrt(spectrum.eigenvalues[:n_terms])
    noise = spectrum.basis[:, :n_terms] @ scores
    logger.debug(
        "KL sampling with %d terms captures %.6f of the variance",
        n_terms,
        spectrum.captured_variance(n_terms),
    )
    return SamplePath(grid, drift(grid) + noise, _meta(model, drift, seed, f"kl({n_terms})"))


def simulate(
    model: CovarianceModel,
    drift: DriftFunction,
    grid: GridLike,
    seed: int,
    method: str = "auto",
    n_terms: Optional[int] = None,
) -> SamplePath:
    """Dispatch to the exact OU recursion, Cholesky or KL sampling."""

    if method == "auto":
        method = "exact" if isinstance(model, OrnsteinUhlenbeck) else "cholesky"
    if method == "exact":
        return simulate_ou(model, drift, grid, seed)
    if method == "cholesky":
        return simulate_cholesky(model, drift, grid, seed)
    if method == "kl":
        return simulate_kl(model, drift, grid, n_terms or len(np.asarray(grid)), seed)
    raise ValidationError({"method": f"unknown sampling method {method!r}"})


def total_variance_check(spectrum: KLSpectrum, grid: np.ndarray, model: CovarianceModel) -> float:
    """Trace identity: sum of eigenvalues equals the integral of gamma(t,t)."""

    return float(trapezoid(model.variance(grid), grid) - np.sum(spectrum.eigenvalues))
