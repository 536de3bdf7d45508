import unittest

import numpy as np

from sure_drift.exceptions import DomainError, ValidationError
from sure_drift.models.drift import DriftFunction
from sure_drift.models.path import SamplePath


class DriftFunctionTests(unittest.TestCase):
    def setUp(self):
        self.t = np.linspace(0.0, 1.0, 101)

    def test_simple_scenario_formula(self):
        expected = 0.2 * np.maximum(0.0, np.sin(3.0 * np.pi * self.t))
        np.testing.assert_allclose(DriftFunction.scenario("simple")(self.t), expected, atol=1e-15)

    def test_level_scenario_formula(self):
        bump = np.maximum(0.0, np.sin(3.0 * np.pi * self.t))
        expected = 0.3 + 0.2 * np.sign(np.sin(2.0 * np.pi * self.t)) * bump
        np.testing.assert_allclose(DriftFunction.scenario("level")(self.t), expected, atol=1e-15)

    def test_constant_and_linear(self):
        np.testing.assert_array_equal(DriftFunction.constant(0.3)(self.t), np.full(101, 0.3))
        np.testing.assert_array_equal(DriftFunction.linear(2.0)(self.t), 2.0 * self.t)
        np.testing.assert_array_equal(DriftFunction.linear(2.0).slope_weight(self.t), self.t)

    def test_tabulated_drift_refuses_extrapolation(self):
        drift = DriftFunction.tabulated([0.0, 0.5], [1.0, 2.0])
        self.assertAlmostEqual(float(drift(0.25)), 1.5)
        with self.assertRaises(DomainError):
            drift(np.array([0.75]))

    def test_unknown_scenario(self):
        with self.assertRaises(ValidationError):
            DriftFunction.scenario("square")

    def test_zero_drift_has_no_scalar_parameter(self):
        with self.assertRaises(ValidationError):
            DriftFunction.zero().slope_weight(self.t)


class SamplePathTests(unittest.TestCase):
    def test_arrays_are_read_only(self):
        path = SamplePath([0.0, 0.5, 1.0], [1.0, 2.0, 3.0])
        with self.assertRaises(ValueError):
            path.values[0] = 5.0
        self.assertEqual(len(path), 3)
        self.assertEqual(path.duration, 1.0)

    def test_grid_must_increase(self):
        with self.assertRaises(ValidationError) as caught:
            SamplePath([0.0, 0.5, 0.5], [1.0, 2.0, 3.0])
        self.assertIn("grid", caught.exception.messages)

    def test_lengths_must_match(self):
        with self.assertRaises(ValidationError):
            SamplePath([0.0, 1.0], [1.0])

    def test_with_values_keeps_grid_and_meta(self):
        path = SamplePath([0.0, 1.0], [1.0, 2.0])
        shrunk = path.with_values([0.0, 0.0], note="zeroed")
        np.testing.assert_array_equal(shrunk.grid, path.grid)
        self.assertEqual(shrunk.meta.note, "zeroed")
        self.assertIsNone(shrunk.drift_values)


if __name__ == "__main__":
    unittest.main()
