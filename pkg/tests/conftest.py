"""Shared fixtures: a unit-variance model and a deterministic ramp path."""

import numpy as np
import pytest

from sure_drift.models.covariance import OrnsteinUhlenbeck, Tabulated
from sure_drift.models.path import SamplePath
from sure_drift.services.simulate import make_grid, simulate
from sure_drift.models.drift import DriftFunction


@pytest.fixture
def unit_model():
    """gamma(s, t) == 1 on [0, 1], so Z_t equals X_t - alpha(t)."""

    return Tabulated(grid=[0.0, 1.0], matrix=[[1.0, 1.0], [1.0, 1.0]])


@pytest.fixture
def ramp_path():
    grid = np.linspace(0.0, 1.0, 1001)
    return SamplePath(grid, grid.copy())


@pytest.fixture
def ou_model():
    return OrnsteinUhlenbeck(horizon=1.0, a=0.5, sigma=0.05)


@pytest.fixture
def ou_paths(ou_model):
    grid = make_grid(ou_model, 1000)
    drift = DriftFunction.scenario("simple")
    return [simulate(ou_model, drift, grid, seed) for seed in range(5)]
