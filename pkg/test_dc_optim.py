import unittest
import numpy as np
from gradflow_core.dc_optim import (
    Energy,
    MomentumSpec,
    SplitEnergy,
    check_doubled_monotone,
    check_energy_monotone,
    check_nonconvergence_example,
    check_rate_condition,
    check_strong_descent,
    dca_step,
    doubled_energy,
    dual_dca_step,
    energy_rate_factor,
    euler_splitting,
    flat_ratio_profile,
    ipiano_parameters,
    momentum_step,
    momentum_tau,
    optimal_splitting_shift,
    polyak_momentum,
    run,
    semi_implicit_step,
    spiral_energy_polar,
    spiral_partials,
    validate_split_energy,
)
from gradflow_core.energies import as_energy, double_well, get_energy, quadratic, rosenbrock
from gradflow_core.errors import Diverged, InvalidSplitting
from gradflow_core.models import SolverConfig


def runaway_energy():
    return Energy(dim=1, H=lambda u: -0.5 * float(u @ u), grad=lambda u: -np.asarray(u), lip=1.0)


class TestSteps(unittest.TestCase):
    def test_dca_step_quadratic(self):
        u_next = dca_step(quadratic(), [1.0])
        np.testing.assert_allclose(u_next, [0.5])

    def test_semi_implicit_step_quadratic(self):
        # (2 + 1/tau) u_next = (1 + 1/tau) u
        for tau in (0.1, 1.0, 10.0):
            u_next = semi_implicit_step(quadratic(), tau, [1.0])
            expected = (1.0 + 1.0 / tau) / (2.0 + 1.0 / tau)
            self.assertAlmostEqual(float(u_next[0]), expected, places=10)

    def test_euler_splitting_is_explicit_euler(self):
        energy = as_energy(double_well())
        split = euler_splitting(energy, 0.1)
        u = np.array([0.3])
        np.testing.assert_allclose(dca_step(split, u), u - 0.1 * energy.grad(u), rtol=1e-12)

    def test_dual_step_matches_primal(self):
        split = quadratic()
        u = np.array([0.8])
        p = split.grad_Hplus(u)
        p_next = dual_dca_step(split, p)
        np.testing.assert_allclose(p_next, split.grad_Hplus(dca_step(split, u)), rtol=1e-12)

    def test_doubled_energy(self):
        value = doubled_energy(quadratic(), [0.5], [1.0])
        self.assertAlmostEqual(value, 0.125 + 0.25 * 3.0 * 0.25)


class TestSplitEnergy(unittest.TestCase):
    def test_rejects_nonpositive_moduli(self):
        with self.assertRaises(InvalidSplitting):
            SplitEnergy(
                dim=1,
                eval_Hplus=lambda u: 0.0,
                eval_Hminus=lambda u: 0.0,
                grad_Hplus=lambda u: 0 * u,
                grad_Hminus=lambda u: 0 * u,
                kappa=0.0,
                mu=0.0,
                lip_L=1.0,
            )

    def test_registry_splittings_validate(self):
        for name in ("quadratic", "quartic", "double_well"):
            report = validate_split_energy(get_energy(name))
            self.assertTrue(report.passed, name)

    def test_overstated_kappa_is_caught(self):
        split = SplitEnergy(
            dim=1,
            eval_Hplus=lambda u: float(u @ u),
            eval_Hminus=lambda u: 0.5 * float(u @ u),
            grad_Hplus=lambda u: 2.0 * u,
            grad_Hminus=lambda u: np.array(u, dtype=float),
            kappa=5.0,
            mu=1.0,
            lip_L=2.0,
        )
        report = validate_split_energy(split)
        self.assertFalse(report.checks["convex_plus"])
        self.assertTrue(report.checks["identity"])


class TestMonotonicity(unittest.TestCase):
    def test_dca_and_semi_implicit_decrease(self):
        cases = [
            (quadratic(), [1.0]),
            (double_well(), [0.5]),
            (rosenbrock(), [-1.2, 1.0]),
        ]
        for split, u0 in cases:
            for scheme in ("dca", "semi_implicit"):
                cfg = SolverConfig(max_iters=1000, grad_tol=1e-12, tau=1.0)
                trace = run(scheme, split, u0, cfg)
                self.assertTrue(trace.is_consistent())
                report = check_energy_monotone(trace, split)
                self.assertTrue(report.passed, f"{split.name} {scheme}: {report.details}")

    def test_semi_implicit_unconditionally_stable(self):
        split = double_well()
        for tau in (0.1, 1.0, 10.0, 100.0):
            for u0 in ([0.5], [-1.8]):
                trace = run("semi_implicit", split, u0, SolverConfig(max_iters=200, tau=tau))
                self.assertTrue(np.all(np.diff(trace.energy_array()) <= 1e-12), f"tau={tau}")

    def test_strong_descent_and_rate_condition(self):
        trace = run("dca", quadratic(), [1.0])
        self.assertEqual(trace.stop_reason, "gradient_tol")
        # for this splitting the descent ratio is exactly 3/4
        self.assertTrue(check_strong_descent(trace, 0.5).passed)
        self.assertFalse(check_strong_descent(trace, 0.9).checks["primary"])
        self.assertTrue(check_rate_condition(trace, 2.0).passed)

    def test_momentum_doubled_energy_monotone(self):
        split = double_well()
        beta = 0.4 * 0.5 * (split.kappa + split.mu)
        mom = MomentumSpec(grad_b=lambda u: beta * np.asarray(u), beta=beta)
        trace = run("momentum", split, [0.5], SolverConfig(max_iters=1000), mom)
        self.assertGreater(len(trace.doubled), 1)
        self.assertTrue(check_doubled_monotone(trace).passed)

    def test_momentum_outside_regime_rejected(self):
        split = quadratic()
        mom = MomentumSpec(grad_b=lambda u: 2.0 * np.asarray(u), beta=2.0)
        with self.assertRaises(InvalidSplitting):
            run("momentum", split, [1.0], mom=mom)


class TestAcceleratedSchemes(unittest.TestCase):
    def test_polyak_hand_step(self):
        half_square = Energy(
            dim=1, H=lambda u: 0.5 * float(u @ u), grad=lambda u: np.asarray(u, dtype=float), lip=1.0
        )
        split, mom = polyak_momentum(half_square, 0.5, 0.1)
        u_next = momentum_step(split, mom, [1.0], [1.0])
        self.assertAlmostEqual(float(u_next[0]), 0.5, places=14)
        u_next = momentum_step(split, mom, [1.0], [0.0])
        self.assertAlmostEqual(float(u_next[0]), 0.6, places=14)

    def test_default_momentum_step(self):
        energy = as_energy(quadratic())
        self.assertAlmostEqual(momentum_tau(energy), 1.0 / energy.lip)
        split, _ = polyak_momentum(energy, momentum_tau(energy), 0.3)
        self.assertGreater(split.mu, 0.0)
        # tau L = 2 leaves H- concave, which the splitting refuses
        with self.assertRaises(InvalidSplitting):
            polyak_momentum(energy, 2.0 / energy.lip, 0.3)

    def test_polyak_converges_on_quadratic(self):
        split, mom = polyak_momentum(as_energy(quadratic()), 0.5, 0.3)
        trace = run("momentum", split, [1.0], SolverConfig(max_iters=500, grad_tol=5e-11), mom)
        self.assertEqual(trace.stop_reason, "gradient_tol")
        self.assertLess(float(np.linalg.norm(trace.final)), 1e-10)

    def test_nesterov_converges_on_quadratic(self):
        split, mom = polyak_momentum(as_energy(quadratic()), 0.5, 0.3)
        trace = run("nesterov", split, [1.0], SolverConfig(max_iters=500, grad_tol=5e-11), mom)
        self.assertEqual(trace.stop_reason, "gradient_tol")
        self.assertLess(float(np.linalg.norm(trace.final)), 1e-10)

    def test_dual_run_matches_primal(self):
        primal = run("dca", quadratic(), [1.0])
        dual = run("dual", quadratic(), [1.0])
        self.assertEqual(len(primal.states), len(dual.states))
        np.testing.assert_allclose(primal.final, dual.final, atol=1e-15)

    def test_parameter_helpers(self):
        params = ipiano_parameters(0.5, 0.2, 1.0)
        self.assertAlmostEqual(params["kappa"], 2.0)
        self.assertAlmostEqual(params["mu"], 1.0)
        self.assertTrue(params["monotone"])
        shifted = optimal_splitting_shift(5.0, 1.0, 2.0)
        self.assertEqual(shifted, {"t": 2.0, "kappa": 3.0, "mu": 4.0, "lip_L": 7.0})
        self.assertAlmostEqual(energy_rate_factor(0.5, 1.0, 1.0), 0.5)


class TestRun(unittest.TestCase):
    def test_unknown_scheme(self):
        with self.assertRaises(ValueError):
            run("newton", quadratic(), [1.0])

    def test_momentum_needs_spec(self):
        with self.assertRaises(ValueError):
            run("momentum", quadratic(), [1.0])

    def test_divergence_recorded(self):
        split = euler_splitting(runaway_energy(), 1.0)
        trace = run("dca", split, [1.0], SolverConfig(max_iters=100))
        self.assertEqual(trace.stop_reason, "diverged")
        with self.assertRaises(Diverged):
            run("dca", split, [1.0], SolverConfig(max_iters=100), strict=True)

    def test_max_iters(self):
        trace = run("dca", quadratic(), [1.0], SolverConfig(max_iters=3))
        self.assertEqual(trace.stop_reason, "max_iters")
        self.assertEqual(len(trace.step_norms), 3)


class TestNonConvergence(unittest.TestCase):
    def test_spiral_flow_keeps_turning(self):
        traj = check_nonconvergence_example(t_max=1.0e5, dt=0.08)
        self.assertTrue(np.all(traj.r > 1.0))
        self.assertLess(traj.energies[-1], traj.energies[0])
        self.assertLess(traj.r[-1] - 1.0, 0.1)
        self.assertGreater(traj.angular_travel, 4.0 * np.pi)

    def test_spiral_energy_vanishes_on_circle(self):
        self.assertEqual(spiral_energy_polar(1.0, 0.3), 0.0)
        self.assertEqual(spiral_partials(1.0, 0.3), (0.0, 0.0))
        # positive outside, so a descending path can only go inwards
        for r in (1.01, 1.2, 2.0):
            for theta in np.linspace(0.0, 2.0 * np.pi, 7):
                self.assertGreater(spiral_energy_polar(r, theta), 0.0)

    def test_flat_ratio_unbounded(self):
        profile = flat_ratio_profile(0.5)
        self.assertTrue(np.all(np.diff(profile) > 0))
        self.assertGreater(profile[-1], 1e5)


if __name__ == "__main__":
    unittest.main()
