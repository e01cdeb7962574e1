import unittest
import numpy as np
from gradflow_core.dc_optim import run
from gradflow_core.energies import quadratic
from gradflow_core.errors import InsufficientData, NonMonotoneTail
from gradflow_core.loja_diag import (
    LojaStatsCalculator,
    angle_rate_profile,
    classify_decay,
    energy_rate_check,
    estimate_exponent,
    l1_tail_bound_check,
    rate_report,
)
from gradflow_core.models import IterateTrace


def quadratic_flow(t_end=20.0, n=201):
    # u' = -u, H = u^2/2
    t = np.linspace(0.0, t_end, n)
    u = np.exp(-t)
    return t, u, 0.5 * u**2, u


def quartic_flow(t_end=1000.0, n=2001):
    # u' = -u^3, H = u^4/4
    t = np.linspace(0.0, t_end, n)
    u = 1.0 / np.sqrt(1.0 + 2.0 * t)
    return t, u, 0.25 * u**4, u**3


class TestEstimateExponent(unittest.TestCase):
    def test_quadratic_flow(self):
        _, _, H, g = quadratic_flow()
        fit = estimate_exponent(H, g, h_limit=0.0)
        self.assertAlmostEqual(fit.theta, 0.5, delta=0.02)
        self.assertAlmostEqual(fit.c, np.sqrt(2.0), delta=1e-6)
        self.assertEqual(fit.model, "exponential")
        self.assertGreater(fit.fit_r2, 0.999)

    def test_quadratic_flow_last_limit(self):
        _, _, H, g = quadratic_flow()
        fit = estimate_exponent(H, g)
        self.assertAlmostEqual(fit.theta, 0.5, delta=0.02)

    def test_quartic_flow(self):
        _, _, H, g = quartic_flow()
        fit = estimate_exponent(H, g, h_limit=0.0)
        self.assertAlmostEqual(fit.theta, 0.25, delta=1e-6)
        self.assertAlmostEqual(fit.c, 4.0**0.75, delta=1e-6)
        self.assertEqual(fit.model, "algebraic")

    def test_quartic_flow_fitted_limit(self):
        _, _, H, g = quartic_flow()
        fit = estimate_exponent(H, g, h_limit="fit")
        self.assertAlmostEqual(fit.theta, 0.25, delta=0.05)
        self.assertLess(fit.h_limit, H[-1])

    def test_too_few_samples(self):
        with self.assertRaises(InsufficientData):
            estimate_exponent(np.linspace(1, 0.1, 5), np.ones(5))

    def test_constant_energy(self):
        with self.assertRaises(InsufficientData):
            estimate_exponent(np.ones(20), np.ones(20))

    def test_exponent_out_of_range(self):
        k = np.arange(30)
        with self.assertRaises(InsufficientData):
            estimate_exponent(np.exp(-0.1 * k), np.ones(30))

    def test_non_monotone_tail(self):
        k = np.arange(60)
        energies = np.exp(-0.1 * k) * (1.5 + np.sin(k))
        with self.assertRaises(NonMonotoneTail):
            estimate_exponent(energies, np.ones(60) + energies, h_limit=0.0)

    def test_bad_mode(self):
        _, _, H, g = quadratic_flow()
        with self.assertRaises(ValueError):
            estimate_exponent(H, g, h_limit="median")


class TestLimits(unittest.TestCase):
    def test_aitken_on_geometric_sequence(self):
        k = np.arange(20)
        energies = 2.0 + 3.0 * 0.5**k
        self.assertAlmostEqual(LojaStatsCalculator.aitken_limit(energies), 2.0, places=12)

    def test_usable_tail_drops_limit_samples(self):
        energies = np.array([1.0, 0.5, 0.25, 0.125, 0.125])
        grads = np.array([1.0, 1.0, 1.0, 1.0, 0.0])
        idx = LojaStatsCalculator.usable_tail(energies, grads, 0.125, 1.0)
        np.testing.assert_array_equal(idx, [0, 1, 2])


class TestClassifyDecay(unittest.TestCase):
    def test_exponential(self):
        t, u, _, _ = quadratic_flow()
        decay = classify_decay(t, u, limit=0.0)
        self.assertEqual(decay.model, "exponential")
        self.assertAlmostEqual(decay.rate, 1.0, delta=1e-6)

    def test_algebraic_matches_exponent(self):
        t, u, _, _ = quartic_flow()
        decay = classify_decay(t, u, limit=0.0, theta=0.25)
        self.assertEqual(decay.model, "algebraic")
        self.assertAlmostEqual(decay.rate, 0.5, delta=0.1)
        self.assertAlmostEqual(decay.predicted_power, 0.5)
        self.assertTrue(decay.consistent)

    def test_vector_states(self):
        t, u, _, _ = quadratic_flow()
        states = np.stack([u, 2.0 * u], axis=1)
        decay = classify_decay(t, states, limit=np.zeros(2))
        self.assertEqual(decay.model, "exponential")


class TestTraceChecks(unittest.TestCase):
    def setUp(self):
        self.trace = run("dca", quadratic(), [1.0])

    def test_l1_tail_bound(self):
        report = l1_tail_bound_check(self.trace, np.sqrt(2.0), 0.75, 0.5)
        self.assertTrue(report.passed)
        self.assertGreaterEqual(report.details["min_slack"], 0.0)

    def test_l1_tail_invalid_theta(self):
        report = l1_tail_bound_check(self.trace, np.sqrt(2.0), 0.75, 0.7)
        self.assertFalse(report.checks["valid_theta"])
        self.assertFalse(report.passed)

    def test_energy_rate(self):
        # H_n = 4^-n / 2 and the bound 1 - sigma gamma c^2 is exactly 1/4
        energies = self.trace.energies
        self.assertTrue(energy_rate_check(energies, 0.75, 0.5, np.sqrt(2.0), h_limit=0.0).passed)
        self.assertFalse(energy_rate_check(energies, 0.9, 0.5, np.sqrt(2.0), h_limit=0.0).passed)

    def test_empirical_constants(self):
        c, sigma = LojaStatsCalculator.empirical_constants(
            self.trace.energies, self.trace.grad_norms, self.trace.step_norms, 0.5, 0.0
        )
        self.assertAlmostEqual(c, np.sqrt(2.0), places=8)
        self.assertAlmostEqual(sigma, 0.75, places=8)

    def test_angle_rate_profile(self):
        profile = angle_rate_profile(self.trace)
        np.testing.assert_allclose(profile.sigma.compressed(), 0.75, rtol=1e-9)
        np.testing.assert_allclose(profile.gamma.compressed(), 0.5, rtol=1e-9)
        self.assertEqual(profile.flagged.size, 0)

    def test_angle_rate_flags_zero_steps(self):
        trace = IterateTrace()
        trace.record(np.array([1.0]), 0.5, 1.0)
        trace.record(np.array([1.0]), 0.5, 1.0)
        trace.record(np.array([0.5]), 0.125, 0.5)
        profile = angle_rate_profile(trace)
        np.testing.assert_array_equal(profile.flagged, [0])

    def test_rate_report(self):
        _, _, H, g = quadratic_flow()
        fit = estimate_exponent(H, g, h_limit=0.0)
        t, u, _, _ = quadratic_flow()
        decay = classify_decay(t, u, limit=0.0)
        tail = l1_tail_bound_check(self.trace, np.sqrt(2.0), 0.75, 0.5)
        record = rate_report(fit, decay, tail)
        self.assertEqual(record["decay_model"], "exponential")
        self.assertTrue(record["l1_tail"])
        for key in ("theta", "c", "model", "fit_r2", "h_limit"):
            self.assertIn(key, record)


if __name__ == "__main__":
    unittest.main()
