import math
import unittest

import pytest

from sure_drift.exceptions import DomainError
from sure_drift.models.covariance import OrnsteinUhlenbeck, lebesgue
from sure_drift.models.drift import DriftFunction
from sure_drift.services.montecarlo import (
    REPORT_COLUMNS,
    SE_MULTIPLIER,
    McConfig,
    McReport,
    McScenario,
    McStatistic,
    Statistic,
    mean_and_se,
    run_baseline_efficiency,
    run_coverage,
    run_risk_bound,
    run_statistics,
    run_unbiasedness,
)
from sure_drift.services.shrinkage import ThresholdSpec


def small_config(n_reps=4, workers=1, **scenario):
    options = {"model": OrnsteinUhlenbeck(), "drift": DriftFunction.scenario("simple"), "grid_size": 200}
    options.update(scenario)
    return McConfig(n_reps=n_reps, seed_base=100, scenario=McScenario(**options), workers=workers)


class SummaryTests(unittest.TestCase):
    def test_mean_and_standard_error(self):
        mean, se = mean_and_se([1.0, 2.0, 3.0])
        self.assertEqual(mean, 2.0)
        self.assertAlmostEqual(se, 1.0 / math.sqrt(3.0), places=12)

    def test_single_sample(self):
        with self.assertRaises(DomainError):
            mean_and_se([1.0])

    def test_seeds_are_consecutive(self):
        self.assertEqual(small_config(n_reps=3).seeds(), [100, 101, 102])

    def test_report_text_and_frame(self):
        passing = McStatistic("unbiasedness", "soft lambda=0.3", 0.01, 0.02, 0.0, True, 10)
        failing = McStatistic("risk_bound", "lambda=1.0", 2.0, 0.1, 1.0, False, 10)
        report = McReport(rows=(passing,)).merge(McReport(rows=(failing,)))
        text = report.to_text()
        self.assertIn("se_multiplier = 3.0", text)
        self.assertIn("[PASS] unbiasedness soft lambda=0.3", text)
        self.assertIn("[FAIL] risk_bound lambda=1.0", text)
        self.assertTrue(text.endswith("overall = FAIL\n"))
        self.assertFalse(report.passed)
        self.assertEqual(list(report.to_frame().columns), REPORT_COLUMNS)


class ReplicationTests(unittest.TestCase):
    def test_single_replicate_is_rejected(self):
        with self.assertRaises(DomainError):
            run_unbiasedness(small_config(n_reps=1), ThresholdSpec.soft(0.3))
        with self.assertRaises(DomainError):
            run_statistics(small_config(n_reps=1))

    def test_coverage_needs_an_exponent_above_one(self):
        with self.assertRaises(DomainError):
            run_coverage(small_config(), r=1.0, horizons=[10.0])

    def test_reruns_are_identical(self):
        spec = ThresholdSpec.soft(0.3)
        first = run_unbiasedness(small_config(), spec)
        second = run_unbiasedness(small_config(), spec)
        self.assertEqual(first.rows, second.rows)

    def test_workers_do_not_change_the_report(self):
        serial = run_risk_bound(small_config(), DriftFunction.zero(), [0.5, 1.0])
        threaded = run_risk_bound(small_config(workers=3), DriftFunction.zero(), [0.5, 1.0])
        self.assertEqual(serial.rows, threaded.rows)

    def test_statistic_selection(self):
        cfg = McConfig(
            n_reps=3,
            seed_base=0,
            scenario=McScenario(OrnsteinUhlenbeck(), DriftFunction.scenario("level"), grid_size=100),
            statistics=frozenset({Statistic.RISK_BOUND}),
        )
        report = run_statistics(cfg, bound_lambdas=(0.5, 2.0))
        self.assertEqual([row.statistic for row in report.rows], ["risk_bound", "risk_bound"])

    def test_baseline_rows(self):
        report = run_baseline_efficiency(small_config(n_reps=3, mu=lebesgue()))
        labels = [row.label for row in report.rows]
        self.assertEqual(labels, ["observation", "sure_soft/observation"])
        self.assertAlmostEqual(report.rows[0].bound, OrnsteinUhlenbeck().stationary_variance, places=9)


@pytest.mark.slow
def test_soft_risk_estimate_is_unbiased():
    cfg = small_config(n_reps=400, grid_size=1000)
    report = run_statistics(
        McConfig(n_reps=400, seed_base=0, scenario=cfg.scenario, statistics=frozenset({Statistic.UNBIASEDNESS})),
        lambdas=(0.3, 1.0),
    )
    assert report.passed, report.to_text()


@pytest.mark.slow
def test_risk_bound_holds_on_the_level_scenario():
    cfg = small_config(n_reps=400, grid_size=1000, drift=DriftFunction.scenario("level"))
    report = run_risk_bound(cfg, DriftFunction.constant(0.3), [0.5, 1.0, 2.0])
    assert report.passed, report.to_text()


@pytest.mark.slow
def test_coverage_grows_with_the_horizon():
    cfg = small_config(n_reps=300, grid_size=1000)
    report = run_coverage(cfg, r=1.5, horizons=[10.0, 100.0, 1000.0])
    assert report.passed, report.to_text()


@pytest.mark.slow
def test_hard_risk_estimate_is_unbiased():
    report = run_unbiasedness(small_config(n_reps=400, grid_size=1000), ThresholdSpec.hard(0.5))
    assert report.passed, report.to_text()


@pytest.mark.slow
def test_observation_efficiency():
    # Same stationary std 0.05 as the default model, correlation time 0.01.
    model = OrnsteinUhlenbeck(a=100.0, sigma=math.sqrt(0.5))
    cfg = small_config(n_reps=400, grid_size=8000, model=model)
    report = run_baseline_efficiency(cfg)
    assert report.passed, report.to_text()
    observation, tuned = report.rows
    assert observation.mean == pytest.approx(1.0, abs=SE_MULTIPLIER * observation.se)
    assert tuned.mean < 1.0
