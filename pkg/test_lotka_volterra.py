import unittest
import numpy as np
from gradflow_core.dc_optim import dca_step
from gradflow_core.errors import InvalidSystem, NotSymmetric, TauTooLarge
from gradflow_core.lotka_volterra import (
    EntropySpec,
    IntervalGrid,
    LVSystem,
    admissible_tau,
    build_splitting,
    competitive2,
    cubic_solve_monotone,
    cubic_solve_odd,
    dca_lv_step,
    default_start,
    discrete_step_shahshahani,
    entropy_F,
    entropy_trap_monitor,
    extinction2,
    get_system,
    integrate_continuous,
    integrate_sqrt,
    logistic,
    lv_monitors,
    lv_quartic_split,
    mutation_energy,
    random_competitive,
    reg_lv_mirror_step,
    run_dca_lv,
    run_discrete,
    run_mutation,
    run_semi_implicit_lv,
    shahshahani_properties,
    spectral_radius,
)

EQUILIBRIUM = np.array([1.0, 1.0]) / 3.0


class TestLVSystem(unittest.TestCase):
    def test_rejects_asymmetric_interaction(self):
        with self.assertRaises(NotSymmetric):
            LVSystem(a=[1.0, 1.0], B=[[1.0, 0.5], [0.2, 1.0]], d=[1.0, 1.0])

    def test_rejects_nonpositive_rates(self):
        with self.assertRaises(InvalidSystem):
            LVSystem(a=[1.0, -1.0], B=np.eye(2), d=[1.0, 1.0])
        with self.assertRaises(InvalidSystem):
            LVSystem(a=[1.0, 1.0], B=np.eye(2), d=[1.0, 0.0])

    def test_registry(self):
        sys = get_system("random_competitive", n=4, seed=3)
        self.assertEqual(sys.n, 4)
        self.assertTrue(sys.competitive)
        np.testing.assert_array_equal(sys.B, random_competitive(4, 3).B)
        with self.assertRaises(KeyError):
            get_system("predator_prey")


class TestContinuousFlow(unittest.TestCase):
    def test_competitive_pair_converges(self):
        trace = integrate_continuous(competitive2(), [0.2, 0.6], 0.01, 80.0, record_every=100)
        np.testing.assert_allclose(trace.final, EQUILIBRIUM, atol=1e-8)
        self.assertTrue(trace.converged)
        self.assertTrue(lv_monitors(trace).passed)

    def test_sqrt_flow_matches_population_flow(self):
        trace = integrate_sqrt(competitive2(), np.sqrt([0.2, 0.6]), 0.01, 80.0, record_every=100)
        np.testing.assert_allclose(trace.populations()[-1], EQUILIBRIUM, atol=1e-8)
        self.assertTrue(np.all(np.diff(trace.h_energies) <= 1e-12))

    def test_extinction_is_trapped(self):
        sys = extinction2()
        trace = integrate_continuous(sys, [0.5, 0.5], 0.01, 80.0, record_every=10)
        f = trace.final
        self.assertAlmostEqual(f[0], 1.0, places=8)
        self.assertGreater(f[1], 0.0)
        self.assertLess(f[1], 1e-8)
        report = entropy_trap_monitor(sys, trace, f_tilde=[1.0, 0.0])
        self.assertEqual(report.details["K"], [1])
        self.assertTrue(report.checks["trapped"])

    def test_entropy_with_extinct_reference(self):
        spec = EntropySpec(f_tilde=[1.0, 0.0], w=[1.0, 1.0])
        self.assertAlmostEqual(entropy_F(spec, [1.0, 0.25]), 0.25)
        self.assertAlmostEqual(entropy_F(spec, [1.0, 1e-12]), 1e-12)


class TestShahshahani(unittest.TestCase):
    def test_single_species_step(self):
        sys = LVSystem(a=[1.0], B=[[1.0]], d=[1.0])
        f_next = discrete_step_shahshahani(sys, 1.0, 0.1, [0.5])
        self.assertAlmostEqual(float(f_next[0]), 0.5 * 1.1 / 1.05, places=14)

    def test_step_size_bound(self):
        bound = admissible_tau(competitive2(), 3.0)
        self.assertGreater(bound.tau_max, 0.1)
        with self.assertRaises(TauTooLarge):
            run_discrete(competitive2(), [0.2, 0.6], tau=0.5)

    def test_lam_below_spectral_radius(self):
        with self.assertRaises(InvalidSystem):
            run_discrete(competitive2(), [0.2, 0.6], tau=0.1, lam=1.0)

    def test_converges_with_properties(self):
        sys = competitive2()
        trace = run_discrete(sys, [0.2, 0.6], tau=0.1)
        self.assertTrue(trace.converged)
        np.testing.assert_allclose(trace.final, EQUILIBRIUM, atol=1e-8)
        report = shahshahani_properties(trace, sys, 3.0, 0.1)
        for name in ("feasibility", "ratio_bound", "energy_monotone", "l2_summable"):
            self.assertTrue(report.checks[name], name)

    def test_logistic(self):
        trace = run_discrete(logistic(), [0.1], tau=0.1)
        self.assertAlmostEqual(float(trace.final[0]), 1.0, places=8)


class TestSplitting(unittest.TestCase):
    def test_spectral_radius(self):
        for seed in range(3):
            B = random_competitive(6, seed).B
            expected = np.max(np.abs(np.linalg.eigvalsh(B)))
            self.assertAlmostEqual(spectral_radius(B), expected, delta=1e-6 * expected)
        self.assertAlmostEqual(spectral_radius([[0.0, 3.0], [3.0, 0.0]]), 3.0, places=8)

    def test_build_splitting(self):
        for seed in range(3):
            B = random_competitive(5, seed).B
            split = build_splitting(B)
            np.testing.assert_allclose(split.Bplus - split.Bminus, B, atol=1e-12)
            self.assertTrue(np.all(split.Bminus >= -1e-10))
            self.assertGreaterEqual(np.linalg.eigvalsh(split.Bminus).min(), -1e-10)

    def test_random_symmetric_splittings(self):
        rng = np.random.default_rng(7)
        for i in range(20):
            M = rng.normal(size=(6, 6))
            B = 0.5 * (M + M.T)
            split = build_splitting(B)
            rho = np.max(np.abs(np.linalg.eigvalsh(B)))
            self.assertAlmostEqual(split.lam, rho, delta=1e-6 * rho, msg=f"matrix {i}")
            np.testing.assert_allclose(split.Bplus - split.Bminus, B, atol=1e-12)
            self.assertTrue(np.all(split.Bminus >= -1e-10), f"matrix {i}")
            self.assertGreaterEqual(np.linalg.eigvalsh(split.Bminus).min(), -1e-10)
            self.assertGreaterEqual(np.linalg.eigvalsh(split.Bplus).min(), -1e-10)

    def test_competitive_pair_splitting(self):
        split = build_splitting(competitive2().B)
        self.assertAlmostEqual(split.lam, 3.0, places=8)
        self.assertEqual(split.beta, 1.0)
        np.testing.assert_allclose(split.Bminus, 2.0 * np.eye(2), atol=1e-8)

    def test_asymmetric(self):
        with self.assertRaises(NotSymmetric):
            build_splitting([[1.0, 2.0], [0.0, 1.0]])


class TestCubicSolves(unittest.TestCase):
    def test_monotone_root(self):
        self.assertAlmostEqual(cubic_solve_monotone(1.0, 1.0, 2.0), 1.0, places=12)
        A = np.array([1.0, 2.0, 0.5])
        C = np.array([0.0, 1.0, 3.0])
        v = np.array([8.0, 0.0, 1e6])
        x = cubic_solve_monotone(A, C, v)
        np.testing.assert_allclose(A * x**3 + C * x, v, rtol=1e-10, atol=1e-12)
        self.assertTrue(np.all(x >= 0))

    def test_monotone_rejects_negative_data(self):
        with self.assertRaises(ValueError):
            cubic_solve_monotone(1.0, 1.0, -1.0)

    def test_odd_root(self):
        self.assertAlmostEqual(cubic_solve_odd(1.0, 1.0, -2.0), -1.0, places=12)
        self.assertAlmostEqual(cubic_solve_odd(0.0, 4.0, 2.0), 0.5)


class TestUSchemes(unittest.TestCase):
    def test_dca_converges(self):
        sys = competitive2()
        trace = run_dca_lv(sys, [0.5, 0.2])
        self.assertTrue(trace.converged)
        np.testing.assert_allclose(trace.populations()[-1], EQUILIBRIUM, atol=1e-8)

    def test_positive_and_monotone_for_any_tau(self):
        for seed in range(10):
            sys = random_competitive(5, seed)
            u0 = np.sqrt(default_start(sys))
            runs = [run_dca_lv(sys, u0, max_iters=200)]
            for tau in (1e-2, 1.0, 10.0, 100.0):
                runs.append(run_semi_implicit_lv(sys, u0, tau, max_iters=200))
            for trace in runs:
                label = f"seed={seed} {trace.scheme}"
                self.assertTrue(np.all(np.asarray(trace.min_components) > 0), label)
                H = np.asarray(trace.h_energies)
                self.assertTrue(np.all(np.diff(H) <= 1e-12 * max(1.0, np.abs(H).max())), label)

    def test_generic_dca_step_matches(self):
        sys = random_competitive(4, 2)
        lv_split = build_splitting(sys.B)
        split = lv_quartic_split(sys, lv_split)
        u = np.array([0.3, 0.7, 0.5, 0.9])
        np.testing.assert_allclose(dca_step(split, u), dca_lv_step(lv_split, sys, u), rtol=1e-8)

    def test_mirror_step(self):
        x = reg_lv_mirror_step(lambda u: u - 1.0, 1.0, 0.0, 0.1, [0.5])
        np.testing.assert_allclose(x, [0.55])
        with self.assertRaises(ValueError):
            reg_lv_mirror_step(lambda u: u - 1.0, 1.0, 1.0, 0.1, [0.5], mode="semi_implicit")


class TestMutation(unittest.TestCase):
    def test_grid(self):
        with self.assertRaises(InvalidSystem):
            IntervalGrid(2)
        grid = IntervalGrid(4)
        np.testing.assert_allclose(grid.x, [0.125, 0.375, 0.625, 0.875])

    def test_energy_of_constant_state(self):
        grid = IntervalGrid(16)
        self.assertAlmostEqual(mutation_energy(grid, 1.0, 1.0, np.ones(16)), -0.125, places=12)

    def test_run_moves_towards_equilibrium(self):
        grid = IntervalGrid(32)
        u0 = 0.5 + 0.1 * np.cos(np.pi * grid.x)
        trace = run_mutation(grid, 1.0, 1.0, 0.01, u0, 200)
        self.assertEqual(len(trace.states), 201)
        self.assertTrue(np.all(np.asarray(trace.min_components) > 0))
        self.assertLess(np.max(np.abs(trace.final - 1.0)), np.max(np.abs(u0 - 1.0)))
        self.assertLess(trace.h_energies[-1], trace.h_energies[0])

    def test_large_step_warns(self):
        grid = IntervalGrid(8)
        with self.assertLogs("gradflow_core.lotka_volterra", level="WARNING"):
            run_mutation(grid, 1.0, 1.0, 50.0, np.full(8, 0.5), 0)


if __name__ == "__main__":
    unittest.main()
