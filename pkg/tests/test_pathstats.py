import logging
import unittest

import numpy as np
import pytest

from sure_drift.exceptions import DomainError, NumericError
from sure_drift.models.covariance import OrnsteinUhlenbeck, Tabulated
from sure_drift.models.drift import DriftFunction
from sure_drift.models.path import SamplePath
from sure_drift.services.pathstats import (
    StandardizedPath,
    band_square,
    check_berman,
    local_time,
    occupation_curve,
    occupation_density_check,
    occupation_time,
    signed_local_time,
    standardize,
    truncated_square,
)
from sure_drift.services.simulate import make_grid, simulate


def ramp(n=1001):
    grid = np.linspace(0.0, 1.0, n)
    return StandardizedPath.from_values(grid, grid)


class OccupationTimeTests(unittest.TestCase):
    def test_ramp_occupation(self):
        self.assertAlmostEqual(occupation_time(ramp(), 0.5), 0.5, places=12)

    def test_zero_level_has_no_occupation(self):
        model = OrnsteinUhlenbeck()
        path = simulate(model, DriftFunction.zero(), make_grid(model, 500), seed=4)
        standardized = standardize(path, DriftFunction.zero(), model)
        self.assertEqual(occupation_time(standardized, 0.0), 0.0)

    def test_large_level_covers_the_whole_path(self):
        path = ramp()
        self.assertAlmostEqual(occupation_time(path, 2.0), path.duration, places=12)

    def test_occupation_is_monotone(self):
        model = OrnsteinUhlenbeck()
        path = simulate(model, DriftFunction.zero(), make_grid(model, 500), seed=9)
        standardized = standardize(path, DriftFunction.zero(), model)
        values = [occupation_time(standardized, lam) for lam in np.linspace(0.0, 4.0, 41)]
        self.assertTrue(np.all(np.diff(values) >= 0))

    def test_negative_level_is_rejected(self):
        with self.assertRaises(DomainError):
            occupation_time(ramp(), -0.1)

    def test_band_and_truncated_squares_on_the_ramp(self):
        path = ramp()
        self.assertAlmostEqual(band_square(path, 0.5), 1.0 / 24.0, places=12)
        self.assertAlmostEqual(truncated_square(path, 0.5), 1.0 / 24.0 + 0.125, places=12)

    def test_standardize_rejects_vanishing_variance(self):
        model = OrnsteinUhlenbeck(sigma=0.0)
        path = SamplePath([0.0, 1.0], [0.0, 0.0])
        with self.assertRaises(NumericError):
            standardize(path, DriftFunction.zero(), model)


class LocalTimeTests(unittest.TestCase):
    def test_ramp_local_time_is_one(self):
        estimate = local_time(ramp(), 0.5, bandwidth=0.01)
        self.assertAlmostEqual(estimate.local_time, 1.0, places=9)
        self.assertAlmostEqual(estimate.occupation, 0.5, places=12)
        self.assertFalse(estimate.wide_bandwidth)

    def test_default_bandwidth_on_the_ramp(self):
        estimate = local_time(ramp(), 0.5)
        self.assertAlmostEqual(estimate.local_time, 1.0, places=9)
        self.assertGreater(estimate.bandwidth, 0.0)

    def test_constant_path_has_no_local_time_away_from_its_value(self):
        path = StandardizedPath.from_values([0.0, 0.5, 1.0], [0.3, 0.3, 0.3])
        with self.assertLogs("sure_drift.services.pathstats", level=logging.WARNING):
            estimate = local_time(path, 1.0, bandwidth=0.1)
        self.assertEqual(estimate.local_time, 0.0)
        self.assertTrue(estimate.wide_bandwidth)

    def test_default_bandwidth_follows_the_grid_increments(self):
        self.assertAlmostEqual(local_time(ramp(), 0.5).bandwidth, 1e-4, places=12)
        self.assertAlmostEqual(local_time(ramp(2001), 0.5).bandwidth, 5e-5, places=12)

    def test_local_time_integrates_to_the_duration(self):
        rng = np.random.default_rng(17)
        grid = np.linspace(0.0, 1.0, 2001)
        walk = np.concatenate([[0.0], np.cumsum(rng.standard_normal(grid.size - 1) * np.sqrt(np.diff(grid)))])
        path = StandardizedPath.from_values(grid, walk)
        step = 0.01
        levels = (np.arange(int(np.abs(walk).max() / step) + 2) + 0.5) * step
        total = sum(local_time(path, level, bandwidth=step / 2.0).local_time for level in levels) * step
        self.assertAlmostEqual(total, path.duration, places=9)

    def test_local_time_is_the_slope_of_the_occupation_time(self):
        grid = np.linspace(0.0, 1.0, 2001)
        path = StandardizedPath.from_values(grid, 1.5 * np.sin(2.0 * np.pi * grid))
        for lam in (0.5, 1.0):
            with self.subTest(lam=lam):
                levels = np.linspace(lam - 0.1, lam + 0.1, 21)
                fit = np.polyfit(levels, [occupation_time(path, level) for level in levels], 3)
                slope = np.polyval(np.polyder(fit), lam)
                self.assertAlmostEqual(local_time(path, lam).local_time / slope, 1.0, delta=0.05)

    def test_occupation_curve_rows(self):
        rows = occupation_curve(ramp(), [0.25, 0.5, 0.75], bandwidth=0.01)
        self.assertEqual([row.level for row in rows], [0.25, 0.5, 0.75])
        for row in rows:
            self.assertAlmostEqual(row.occupation, row.level, places=12)
            self.assertAlmostEqual(row.local_time, 1.0, places=9)


class SignedLocalTimeTests(unittest.TestCase):
    def test_constant_process_away_from_level(self):
        path = SamplePath([0.0, 0.5, 1.0], [2.0, 2.0, 2.0])
        self.assertEqual(signed_local_time(path, 0.5, bandwidth=0.1), 0.0)

    def test_ramp_crossing_once(self):
        grid = np.linspace(0.0, 1.0, 1001)
        path = SamplePath(grid, grid.copy())
        self.assertAlmostEqual(signed_local_time(path, 0.5, bandwidth=0.01), 1.0, places=9)

    def test_inverse_time_weight_needs_positive_times(self):
        grid = np.linspace(0.0, 1.0, 11)
        path = SamplePath(grid, grid.copy())
        with self.assertRaises(DomainError):
            signed_local_time(path, 0.5, lambda t: 1.0 / t, bandwidth=0.01)

    def test_levels_and_weights_given_on_the_nodes(self):
        grid = np.linspace(0.0, 1.0, 1001)
        path = SamplePath(grid, grid.copy())
        nodes = signed_local_time(path, np.full(grid.shape, 0.5), np.ones(grid.shape), bandwidth=0.01)
        self.assertAlmostEqual(nodes, signed_local_time(path, 0.5, 1.0, bandwidth=0.01), places=12)
        self.assertAlmostEqual(nodes, 1.0, places=9)

    def test_node_levels_must_match_the_grid(self):
        grid = np.linspace(0.0, 1.0, 11)
        path = SamplePath(grid, grid.copy())
        with self.assertRaises(DomainError):
            signed_local_time(path, np.zeros(3), bandwidth=0.01)


class BermanTests(unittest.TestCase):
    def test_ou_is_likely_finite(self):
        report = check_berman(OrnsteinUhlenbeck(a=0.5, sigma=0.05))
        self.assertTrue(report.likely_finite, report)
        self.assertEqual(report.exponent, 0.5)
        self.assertEqual(len(report.estimates), 4)

    def test_perfectly_correlated_process_is_likely_divergent(self):
        constant = Tabulated(grid=[0.0, 1.0], matrix=[[1.0, 1.0], [1.0, 1.0]])
        report = check_berman(constant)
        self.assertEqual(report.verdict, "likely-divergent")
        self.assertTrue(report.notes)

    def test_unit_exponent_diverges_on_ou(self):
        model = OrnsteinUhlenbeck(a=0.5, sigma=0.05)
        divergent = check_berman(model, exponent=1.0)
        finite = check_berman(model, exponent=0.5)
        self.assertEqual(divergent.verdict, "likely-divergent")
        self.assertTrue(finite.likely_finite)
        self.assertGreater(divergent.estimates[-1] / divergent.estimates[0], finite.estimates[-1] / finite.estimates[0])

    def test_alpha_is_recorded(self):
        report = check_berman(OrnsteinUhlenbeck(), alpha=DriftFunction.constant(0.3))
        self.assertEqual(report.alpha, "constant(0.3)")


class OccupationDensityTests(unittest.TestCase):
    def levels(self, m):
        return np.linspace(0.0, 1.0, m + 1)

    def test_formula_holds_on_the_ramp(self):
        path = ramp()
        for f in (np.ones_like, lambda a: a, lambda a: a**2):
            self.assertLessEqual(occupation_density_check(path, f, self.levels(100)), 1e-3 * path.duration)

    def test_zero_function_has_zero_residual(self):
        self.assertEqual(occupation_density_check(ramp(), np.zeros_like, self.levels(20)), 0.0)

    def test_residual_shrinks_under_refinement(self):
        residuals = [
            occupation_density_check(ramp(n), lambda a: a**2, self.levels(m))
            for m, n in ((10, 101), (20, 201), (40, 401))
        ]
        self.assertGreater(residuals[0], residuals[1])
        self.assertGreater(residuals[1], residuals[2])

    def test_levels_must_cover_the_path(self):
        with self.assertRaises(DomainError):
            occupation_density_check(ramp(), np.ones_like, [0.1, 0.2])


@pytest.mark.parametrize("lam", [0.0, 0.3, 1.0])
def test_truncated_square_derivative_matches_occupation(lam):
    model = OrnsteinUhlenbeck()
    path = simulate(model, DriftFunction.zero(), make_grid(model, 400), seed=21)
    standardized = standardize(path, DriftFunction.zero(), model)
    h = 1e-6
    lower = max(lam - h, 0.0)
    numeric = (truncated_square(standardized, lam + h) - truncated_square(standardized, lower)) / (lam + h - lower)
    expected = 2.0 * lam * (standardized.duration - occupation_time(standardized, lam))
    assert numeric == pytest.approx(expected, abs=1e-4)
