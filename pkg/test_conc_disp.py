import unittest
import numpy as np
from gradflow_core.conc_disp import (
    CDState,
    align,
    cd_rhs,
    constant_equilibrium,
    evolve,
    frames_bell_shaped,
    functional_monitors,
    functionals,
    manifold_attraction_check,
    mode1_factor,
    petviashvili_solve,
    pointwise_bounds,
    residual,
    seed_initial,
    stability_spectrum,
)
from gradflow_core.errors import DeltaTooLarge, InvalidGrid, NonPositiveState, PetviashviliDiverged
from gradflow_core.kernels import TorusGrid, gaussian, make_kernel
from gradflow_core.models import CDTrace, FunctionalRecord
from scipy.integrate import solve_ivp


def lp1_record(lp1):
    return FunctionalRecord(
        t=0.0, E=1.0, alpha=1.0, F=1.0, c=1.0, lp1_norm=lp1, u_min=1.0, u_max=1.0, ux_max=0.0, residual=0.0
    )


def sech2_profile(x, c=1.0):
    return 1.5 * c / np.cosh(0.5 * np.sqrt(c) * x) ** 2


class TestStates(unittest.TestCase):
    def setUp(self):
        self.grid = TorusGrid(20.0, 128)

    def test_constant_equilibrium(self):
        u_bar = constant_equilibrium(20.0, 2.0)
        self.assertAlmostEqual(20.0 * u_bar**3, 1.0)
        kernel = make_kernel("gaussian", self.grid, sigma=1.0)
        self.assertLess(residual(np.full(128, u_bar), kernel, 2.0), 1e-12)

    def test_seed_initial(self):
        state = seed_initial(self.grid, 2.0, 0.05)
        self.assertAlmostEqual(state.u.max(), constant_equilibrium(20.0, 2.0) + 0.05)
        normalized = seed_initial(self.grid, 2.0, 0.05, normalize_state=True)
        self.assertAlmostEqual(self.grid.lq_norm(normalized.u, 3.0), 1.0, places=12)
        with self.assertRaises(DeltaTooLarge):
            seed_initial(self.grid, 2.0, 0.5)

    def test_seed_raises_functional(self):
        kernel = make_kernel("gaussian", self.grid, sigma=1.0)
        u_bar = constant_equilibrium(20.0, 2.0)
        seed = seed_initial(self.grid, 2.0, 0.05, normalize_state=True)
        self.assertGreater(mode1_factor(20.0, 2.0, gaussian(1.0)), 0.0)
        self.assertGreater(functionals(seed.u, kernel, 2.0).F, functionals(np.full(128, u_bar), kernel, 2.0).F)

    def test_rhs_tangent_to_manifold(self):
        kernel = make_kernel("gaussian", self.grid, sigma=1.0)
        on = seed_initial(self.grid, 2.0, 0.05, normalize_state=True)
        rhs, _ = cd_rhs(on, kernel)
        self.assertAlmostEqual(self.grid.integrate(rhs * on.u**2), 0.0, places=12)
        # off the manifold the flux is c (1 - int u^(p+1))
        off = seed_initial(self.grid, 2.0, 0.05)
        rhs, c = cd_rhs(off, kernel)
        mass = self.grid.integrate(off.u**3)
        self.assertAlmostEqual(self.grid.integrate(rhs * off.u**2), c * (1.0 - mass), places=12)

    def test_residual_is_scale_free(self):
        kernel = make_kernel("gaussian", self.grid, sigma=1.0)
        u_bar = constant_equilibrium(20.0, 2.0)
        self.assertLess(residual(np.full(128, 3.0 * u_bar), kernel, 2.0), 1e-12)
        rough = np.random.default_rng(5).uniform(0.5, 1.5, 128)
        value = residual(rough, kernel, 2.0)
        self.assertGreater(value, 1e-2)
        self.assertLess(value, 1e2)
        self.assertAlmostEqual(residual(7.0 * rough, kernel, 2.0), value, places=10)

    def test_state_validation(self):
        with self.assertRaises(InvalidGrid):
            CDState(grid=self.grid, u=np.ones(64))
        with self.assertRaises(NonPositiveState):
            CDState(grid=self.grid, u=np.zeros(128))
        with self.assertRaises(ValueError):
            CDState(grid=self.grid, u=np.ones(128), p=1.0)

    def test_rhs_vanishes_at_constant(self):
        kernel = make_kernel("gaussian", self.grid, sigma=1.0)
        u_bar = constant_equilibrium(20.0, 2.0)
        rhs, c = cd_rhs(CDState(grid=self.grid, u=np.full(128, u_bar)), kernel)
        self.assertAlmostEqual(c, u_bar, places=12)
        self.assertLess(np.max(np.abs(rhs)), 1e-13)


class TestStability(unittest.TestCase):
    def test_mode1_factor(self):
        spec = gaussian(1.0)
        expected = 2.0 * np.exp(-0.5 * (np.pi / 10.0) ** 2) - 1.0
        self.assertAlmostEqual(mode1_factor(20.0, 2.0, spec), expected, places=12)
        self.assertAlmostEqual(mode1_factor(20.0, 2.0, spec, quadrature=True), expected, delta=1e-7)
        # a short period leaves the constant state stable
        self.assertLess(mode1_factor(2.0, 1.5, spec), 0.0)

    def test_spectrum(self):
        values = stability_spectrum(20.0, 2.0, gaussian(1.0), 3)
        self.assertEqual(len(values), 4)
        self.assertLess(values[0], 0.0)
        self.assertGreater(values[1], 0.0)
        self.assertGreater(values[1], values[2])


class TestEvolve(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.grid = TorusGrid(20.0, 128)
        cls.kernel = make_kernel("gaussian", cls.grid, sigma=1.0)
        state = seed_initial(cls.grid, 2.0, 0.05, normalize_state=True)
        cls.trace = evolve(state, cls.kernel, 0.05, 20.0, record_every=10, frame_every=40)

    def test_functional_laws(self):
        report = functional_monitors(self.trace)
        for name in ("F_monotone", "lp1_monotone", "lp1_towards_one", "manifold_attraction", "E_positive"):
            self.assertTrue(report.checks[name], name)

    def test_pointwise_bounds(self):
        report = pointwise_bounds(self.trace, self.kernel)
        self.assertTrue(report.checks["upper"])
        self.assertTrue(report.checks["lower"])
        self.assertEqual(report.details["transient_index"], 0)

    def test_frames(self):
        self.assertEqual(len(self.trace.frames), 11)
        self.assertEqual(frames_bell_shaped(self.trace), [])
        # mode 1 is unstable, so the profile sharpens
        self.assertGreater(self.trace.records[-1].u_max, self.trace.records[0].u_max)

    def test_integrating_factor_agrees(self):
        state = seed_initial(self.grid, 2.0, 0.05, normalize_state=True)
        rk4 = evolve(state, self.kernel, 0.05, 2.0)
        expo = evolve(state, self.kernel, 0.05, 2.0, stepper="integrating_factor")
        np.testing.assert_allclose(expo.final, rk4.final, atol=1e-4)

    def test_constant_above_manifold_decays(self):
        u_bar = constant_equilibrium(20.0, 2.0)
        state = CDState(grid=self.grid, u=np.full(128, 1.2 * u_bar))
        trace = evolve(state, self.kernel, 0.05, 20.0, record_every=1)
        lp1 = trace.series("lp1_norm")
        self.assertAlmostEqual(lp1[0], 1.2, places=12)
        self.assertTrue(np.all(np.diff(lp1) <= 1e-12))
        self.assertLess(abs(lp1[-1] - 1.0), 1e-6)
        np.testing.assert_allclose(trace.final, u_bar, rtol=1e-6)
        # a constant state follows du/dt = u^2 (1 - L u^3)
        scalar = solve_ivp(
            lambda t, v: v**2 * (1.0 - 20.0 * v**3), (0.0, 2.0), [1.2 * u_bar], rtol=1e-12, atol=1e-14
        )
        at_two = trace.records[40]
        self.assertAlmostEqual(at_two.t, 2.0, places=12)
        self.assertAlmostEqual(at_two.u_max, scalar.y[0, -1], delta=1e-5)

    def test_settled_mass_jitter_is_ignored(self):
        settled = CDTrace(records=[lp1_record(v) for v in (1.02, 1.01, 1.0 + 2e-9, 1.0 - 3e-8, 1.0 + 1e-8)])
        self.assertTrue(manifold_attraction_check(settled).passed)
        self.assertTrue(functional_monitors(settled).checks["lp1_monotone"])
        away = CDTrace(records=[lp1_record(v) for v in (1.02, 1.0 + 1e-9, 1.0 + 5e-7)])
        self.assertFalse(manifold_attraction_check(away).passed)
        backwards = CDTrace(records=[lp1_record(v) for v in (1.02, 1.01, 1.015)])
        self.assertFalse(manifold_attraction_check(backwards).passed)

    def test_bad_arguments(self):
        state = seed_initial(self.grid, 2.0, 0.05)
        with self.assertRaises(ValueError):
            evolve(state, self.kernel, 0.05, 1.0, stepper="euler")
        with self.assertRaises(ValueError):
            evolve(state, self.kernel, 0.0, 1.0)


class TestPetviashvili(unittest.TestCase):
    def setUp(self):
        self.grid = TorusGrid(40.0, 512)
        self.kernel = make_kernel("lorentz", self.grid, c=1.0)
        self.u0 = 2.0 * np.exp(-((self.grid.x / 2.0) ** 2))

    def test_closed_form(self):
        result = petviashvili_solve(self.u0, self.kernel, 2.0, 2.0)
        self.assertTrue(result.converged)
        exact = sech2_profile(self.grid.x)
        self.assertLess(np.max(np.abs(align(result.u, exact) - exact)), 1e-6)
        self.assertAlmostEqual(result.stabilizers[-1], 1.0, places=8)
        self.assertLess(result.residual, 1e-8)

    def test_stabilizer_exponents(self):
        for gamma in (1.5, 2.5):
            result = petviashvili_solve(self.u0, self.kernel, 2.0, gamma, tol=1e-10)
            self.assertTrue(result.converged, f"gamma={gamma}")

    def test_unstabilized_iteration_diverges(self):
        with self.assertRaises(PetviashviliDiverged):
            petviashvili_solve(self.u0, self.kernel, 2.0, 0.0, max_iter=200)

    def test_align(self):
        exact = sech2_profile(self.grid.x)
        np.testing.assert_array_equal(align(np.roll(exact, 37), exact), exact)


if __name__ == "__main__":
    unittest.main()
