import logging
import unittest

import numpy as np
from scipy import stats

from sure_drift.exceptions import DomainError, ValidationError
from sure_drift.models.covariance import BrownianMotion, OrnsteinUhlenbeck
from sure_drift.models.drift import DriftFunction
from sure_drift.services.simulate import (
    captured_variance,
    kl_covariance,
    kl_spectrum,
    make_grid,
    make_rng,
    simulate,
    simulate_cholesky,
    simulate_kl,
    simulate_ou,
    total_variance_check,
)


class OrnsteinUhlenbeckSamplingTests(unittest.TestCase):
    def setUp(self):
        self.model = OrnsteinUhlenbeck(horizon=1.0, a=0.5, sigma=0.05)
        self.grid = make_grid(self.model, 1000)
        self.drift = DriftFunction.scenario("simple")

    def test_default_grid(self):
        self.assertEqual(self.grid.size, 1000)
        self.assertEqual(self.grid[0], 0.0)
        self.assertEqual(self.grid[-1], 1.0)

    def test_zero_noise_reproduces_the_drift(self):
        silent = OrnsteinUhlenbeck(horizon=1.0, a=0.5, sigma=0.0)
        path = simulate_ou(silent, self.drift, self.grid, seed=3)
        np.testing.assert_array_equal(path.values, self.drift(self.grid))

    def test_same_seed_same_path(self):
        first = simulate_ou(self.model, self.drift, self.grid, seed=11)
        second = simulate_ou(self.model, self.drift, self.grid, seed=11)
        other = simulate_ou(self.model, self.drift, self.grid, seed=12)
        self.assertEqual(first.values.tobytes(), second.values.tobytes())
        self.assertFalse(np.array_equal(first.values, other.values))
        self.assertEqual(first.meta.seed, 11)

    def test_non_ou_model_is_a_type_error(self):
        with self.assertRaises(TypeError):
            simulate_ou(BrownianMotion(), self.drift, make_grid(BrownianMotion(), 10), seed=0)

    def test_empty_grid_is_rejected(self):
        with self.assertRaises(DomainError):
            simulate_ou(self.model, self.drift, [], seed=0)

    def test_grid_must_end_at_horizon(self):
        with self.assertRaises(DomainError):
            simulate_ou(self.model, self.drift, [0.0, 0.5], seed=0)

    def test_seed_must_fit_in_64_bits(self):
        with self.assertRaises(ValidationError):
            make_rng(2**64)
        with self.assertRaises(ValidationError):
            make_rng(-1)

    def test_marginal_variance_and_autocorrelation(self):
        grid = np.linspace(0.0, 1.0, 11)
        n = 4000
        samples = np.array(
            [simulate_ou(self.model, DriftFunction.zero(), grid, seed).values for seed in range(n)]
        )

        variance = samples[:, 5].var(ddof=1)
        variance_se = 0.0025 * np.sqrt(2.0 / (n - 1))
        self.assertLess(abs(variance - 0.0025), 4.0 * variance_se)

        correlation = np.corrcoef(samples[:, 0], samples[:, -1])[0, 1]
        expected = np.exp(-0.5)
        correlation_se = (1.0 - expected**2) / np.sqrt(n)
        self.assertLess(abs(correlation - expected), 4.0 * correlation_se)


class GeneralSamplerTests(unittest.TestCase):
    def setUp(self):
        self.model = OrnsteinUhlenbeck(horizon=1.0, a=0.5, sigma=0.05)
        self.grid = make_grid(self.model, 40)

    def test_single_point_cholesky_draw(self):
        grid = make_grid(self.model, 1)
        path = simulate_cholesky(self.model, DriftFunction.constant(1.0), grid, seed=5)
        self.assertEqual(len(path), 1)
        self.assertEqual(path.grid[0], 1.0)
        self.assertNotEqual(path.values[0], 1.0)

    def test_dispatcher_picks_exact_sampler_for_ou(self):
        path = simulate(self.model, DriftFunction.zero(), self.grid, seed=2)
        self.assertEqual(path.meta.method, "ou-exact")
        brownian = BrownianMotion()
        path = simulate(brownian, DriftFunction.zero(), make_grid(brownian, 20), seed=2)
        self.assertEqual(path.meta.method, "cholesky")

    def test_unknown_method(self):
        with self.assertRaises(ValidationError):
            simulate(self.model, DriftFunction.zero(), self.grid, seed=2, method="euler")

    def test_full_expansion_recovers_the_variance(self):
        covariance = kl_covariance(self.model, self.grid, self.grid.size)
        np.testing.assert_allclose(np.diag(covariance), self.model.variance(self.grid), rtol=1e-6)
        self.assertAlmostEqual(captured_variance(self.model, self.grid, self.grid.size), 1.0)

    def test_one_term_expansion_has_rank_one(self):
        covariance = kl_covariance(self.model, self.grid, 1)
        self.assertEqual(np.linalg.matrix_rank(covariance), 1)
        self.assertLess(captured_variance(self.model, self.grid, 1), 1.0)

    def test_trace_identity(self):
        spectrum = kl_spectrum(self.model, self.grid)
        self.assertAlmostEqual(total_variance_check(spectrum, self.grid, self.model), 0.0, places=12)
        self.assertTrue(np.all(np.diff(spectrum.eigenvalues) <= 0))

    def test_kl_truncation_larger_than_grid_warns(self):
        with self.assertLogs("sure_drift.services.simulate", level=logging.WARNING):
            path = simulate_kl(self.model, DriftFunction.zero(), self.grid, self.grid.size + 5, seed=1)
        self.assertEqual(len(path), self.grid.size)

    def test_kl_needs_at_least_one_term(self):
        with self.assertRaises(DomainError):
            simulate_kl(self.model, DriftFunction.zero(), self.grid, 0, seed=1)

    def test_captured_variance_grows_with_the_number_of_terms(self):
        shares = [captured_variance(self.model, self.grid, n) for n in range(1, self.grid.size + 1)]
        self.assertTrue(np.all(np.diff(shares) >= -1e-12), shares)
        self.assertAlmostEqual(shares[-1], 1.0)

    def test_drift_enters_additively(self):
        drift = DriftFunction.scenario("level")
        for method, extra in (("exact", {}), ("cholesky", {}), ("kl", {"n_terms": 10})):
            with self.subTest(method=method):
                shifted = simulate(self.model, drift, self.grid, seed=8, method=method, **extra)
                centred = simulate(self.model, DriftFunction.zero(), self.grid, seed=8, method=method, **extra)
                np.testing.assert_allclose(shifted.values - centred.values, drift(self.grid), rtol=0.0, atol=1e-15)


class SamplerAgreementTests(unittest.TestCase):
    def setUp(self):
        self.model = OrnsteinUhlenbeck(horizon=1.0, a=0.5, sigma=0.05)
        self.grid = np.linspace(0.0, 1.0, 5)

    def draws(self, sampler, seeds):
        return np.array([sampler(self.model, DriftFunction.zero(), self.grid, seed).values for seed in seeds])

    def test_cholesky_and_exact_recursion_share_marginals(self):
        n = 5000
        exact = self.draws(simulate_ou, range(n))
        general = self.draws(simulate_cholesky, range(n, 2 * n))
        for column in (2, 4):
            with self.subTest(column=column):
                self.assertGreater(stats.ks_2samp(exact[:, column], general[:, column]).pvalue, 0.01)

    def test_cholesky_draws_reproduce_the_gram_matrix(self):
        n = 20000
        samples = self.draws(simulate_cholesky, range(n))
        gram = self.model.gram(self.grid)
        empirical = samples.T @ samples / n
        se = np.sqrt((np.outer(np.diag(gram), np.diag(gram)) + gram**2) / n)
        self.assertTrue(np.all(np.abs(empirical - gram) <= 3.0 * se), empirical - gram)


if __name__ == "__main__":
    unittest.main()
