import unittest

import numpy as np

from sure_drift.exceptions import ValidationError
from sure_drift.models.covariance import OrnsteinUhlenbeck, Tabulated
from sure_drift.models.drift import DriftFunction
from sure_drift.models.path import SamplePath
from sure_drift.services.shrinkage import (
    ThresholdKind,
    ThresholdSpec,
    apply_estimator,
    eta_hard,
    eta_soft,
)
from sure_drift.services.simulate import make_grid, simulate


class EtaTests(unittest.TestCase):
    def test_soft(self):
        self.assertEqual(eta_soft(1.5), 0.5)
        self.assertEqual(eta_soft(-1.5), -0.5)
        self.assertEqual(eta_soft(0.7), 0.0)

    def test_hard(self):
        self.assertEqual(eta_hard(0.5), 0.0)
        self.assertEqual(eta_hard(1.5), 1.5)
        self.assertEqual(eta_hard(-2.0), -2.0)

    def test_arrays_keep_their_shape(self):
        values = eta_soft(np.array([-3.0, 0.0, 3.0]))
        np.testing.assert_array_equal(values, [-2.0, 0.0, 2.0])


class ThresholdSpecTests(unittest.TestCase):
    def test_negative_lambda_is_rejected(self):
        with self.assertRaises(ValidationError):
            ThresholdSpec.soft(-0.1)

    def test_infinite_lambda_is_rejected(self):
        with self.assertRaises(ValidationError):
            ThresholdSpec.hard(float("inf"))

    def test_kind_accepts_strings(self):
        spec = ThresholdSpec("hard", DriftFunction.zero(), 1.0)
        self.assertIs(spec.kind, ThresholdKind.HARD)


class ApplyEstimatorTests(unittest.TestCase):
    def setUp(self):
        self.model = OrnsteinUhlenbeck()
        self.path = simulate(self.model, DriftFunction.scenario("simple"), make_grid(self.model, 300), seed=3)

    def test_zero_threshold_is_the_identity(self):
        for spec in (ThresholdSpec.soft(0.0), ThresholdSpec.hard(0.0)):
            estimate = apply_estimator(self.path, spec, self.model)
            np.testing.assert_array_equal(estimate.values, self.path.values)

    def test_soft_never_crosses_the_centre(self):
        alpha = DriftFunction.constant(0.1)
        estimate = apply_estimator(self.path, ThresholdSpec.soft(1.0, alpha), self.model)
        before = self.path.values - 0.1
        after = estimate.values - 0.1
        self.assertTrue(np.all(before * after >= 0))
        self.assertTrue(np.all(np.abs(after) <= np.abs(before)))

    def test_hard_keeps_or_replaces(self):
        alpha = DriftFunction.constant(0.1)
        estimate = apply_estimator(self.path, ThresholdSpec.hard(1.0, alpha), self.model)
        kept = estimate.values == self.path.values
        replaced = estimate.values == 0.1
        self.assertTrue(np.all(kept | replaced))

    def test_unit_variance_ramp(self):
        grid = np.linspace(0.0, 1.0, 11)
        ramp = SamplePath(grid, grid.copy())

        unit = Tabulated(grid=[0.0, 1.0], matrix=[[1.0, 1.0], [1.0, 1.0]])
        soft = apply_estimator(ramp, ThresholdSpec.soft(0.5), unit)
        np.testing.assert_allclose(soft.values, np.maximum(grid - 0.5, 0.0), atol=1e-15)
        hard = apply_estimator(ramp, ThresholdSpec.hard(0.5), unit)
        np.testing.assert_allclose(hard.values, np.where(grid < 0.5, 0.0, grid), atol=1e-15)
        self.assertIn("soft", soft.meta.note)
