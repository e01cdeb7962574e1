import unittest
import numpy as np
from gradflow_core.conc_disp import (
    CDState,
    cd_rhs,
    constant_equilibrium,
    functional_monitors,
    mode1_factor,
    seed_initial,
)
from gradflow_core.kernels import TorusGrid, gaussian, make_kernel
from gradflow_core.reg_conc_disp import (
    RegCDConfig,
    decay_fit,
    epsilon_continuation,
    reg_energy,
    reg_evolve,
    reg_F_gradient,
    reg_rhs,
    reg_stability_factor,
)


class TestRegCDConfig(unittest.TestCase):
    def setUp(self):
        self.grid = TorusGrid(20.0, 128)

    def test_validation(self):
        bad = [
            {"epsilon": -1e-3},
            {"epsilon": 1e-3, "p": 1.0},
            {"epsilon": 1e-3, "dt_cfl_safety": 0.0},
            {"epsilon": 1e-3, "derivative": "upwind"},
            {"epsilon": 1e-3, "dt_max": 1e-12},
        ]
        for kwargs in bad:
            with self.assertRaises(ValueError, msg=str(kwargs)):
                RegCDConfig(grid=self.grid, **kwargs)

    def test_cfl_dt(self):
        self.assertEqual(RegCDConfig(epsilon=0.0, grid=self.grid).cfl_dt(np.ones(128)), 0.1)
        cfg = RegCDConfig(epsilon=1e-3, grid=self.grid)
        self.assertEqual(cfg.cfl_dt(np.ones(128)), 0.1)
        expected = 0.25 * self.grid.dx**2 / (1e-3 * 2.0 * 100.0)
        self.assertAlmostEqual(cfg.cfl_dt(np.full(128, 100.0)), expected, places=14)


class TestRegularizedOperators(unittest.TestCase):
    def setUp(self):
        self.grid = TorusGrid(20.0, 64)
        self.kernel = make_kernel("gaussian", self.grid, sigma=1.0)
        self.u = seed_initial(self.grid, 2.0, 0.05).u

    def test_zero_epsilon_is_unregularized(self):
        cfg = RegCDConfig(epsilon=0.0, grid=self.grid)
        rhs, c = reg_rhs(self.u, self.kernel, cfg)
        base, base_c = cd_rhs(CDState(grid=self.grid, u=self.u), self.kernel)
        np.testing.assert_allclose(rhs, base, atol=1e-15)
        self.assertAlmostEqual(c, base_c)

    def test_diffusion_lowers_energy(self):
        E0, _, _ = reg_energy(self.u, self.kernel, RegCDConfig(epsilon=0.0, grid=self.grid))
        E1, F1, alpha = reg_energy(self.u, self.kernel, RegCDConfig(epsilon=1e-2, grid=self.grid))
        self.assertLess(E1, E0)
        self.assertAlmostEqual(F1, E1 / alpha)

    def test_gradient_vanishes_at_constant(self):
        u_bar = np.full(64, constant_equilibrium(20.0, 2.0))
        cfg = RegCDConfig(epsilon=1e-2, grid=self.grid)
        self.assertLess(np.max(np.abs(reg_F_gradient(u_bar, self.kernel, cfg))), 1e-13)

    def test_stability_factor(self):
        spec = gaussian(1.0)
        self.assertAlmostEqual(reg_stability_factor(20.0, 2.0, 0.0, spec), mode1_factor(20.0, 2.0, spec))
        lam = 2 * np.pi / 20.0
        self.assertAlmostEqual(
            reg_stability_factor(20.0, 2.0, 0.5, spec),
            mode1_factor(20.0, 2.0, spec) - 0.5 * 2.0 * lam**2,
        )
        # enough diffusion stabilizes the constant state
        self.assertLess(reg_stability_factor(20.0, 2.0, 10.0, spec), 0.0)


class TestRegEvolve(unittest.TestCase):
    def setUp(self):
        self.grid = TorusGrid(20.0, 64)
        self.kernel = make_kernel("gaussian", self.grid, sigma=1.0)

    def test_short_run(self):
        cfg = RegCDConfig(epsilon=1e-3, grid=self.grid)
        u0 = seed_initial(self.grid, 2.0, 0.05, normalize_state=True).u
        trace = reg_evolve(u0, self.kernel, cfg, 5.0, frame_every=10)
        self.assertAlmostEqual(trace.records[-1].t, 5.0)
        self.assertTrue(trace.monitors_armed)
        report = functional_monitors(trace)
        for name in ("F_monotone", "lp1_monotone", "manifold_attraction", "E_positive"):
            self.assertTrue(report.checks[name], name)
        self.assertGreater(len(trace.frames), 2)
        self.assertTrue(np.all(trace.final > 0))

    def test_nonpositive_energy_disarms_monitors(self):
        cfg = RegCDConfig(epsilon=100.0, grid=self.grid)
        u0 = 1.0 + 0.5 * np.cos(2 * np.pi * 5 * self.grid.x / self.grid.L)
        with self.assertLogs("gradflow_core.reg_conc_disp", level="WARNING"):
            trace = reg_evolve(u0, self.kernel, cfg, 1e-3)
        self.assertFalse(trace.monitors_armed)
        self.assertTrue(trace.warnings[0].startswith("NonPositiveEnergy"))
        self.assertNotIn("F_monotone", functional_monitors(trace).checks)

    def test_decay_fit_needs_frames(self):
        cfg = RegCDConfig(epsilon=1e-3, grid=self.grid)
        u0 = seed_initial(self.grid, 2.0, 0.05).u
        trace = reg_evolve(u0, self.kernel, cfg, 0.5)
        with self.assertRaises(ValueError):
            decay_fit(trace)

    def test_continuation(self):
        u0 = seed_initial(self.grid, 2.0, 0.05).u
        family = epsilon_continuation([1e-2, 1e-3], u0, self.kernel, 2.0, 2.0)
        self.assertEqual([entry["epsilon"] for entry in family], [1e-2, 1e-3])
        for entry in family:
            self.assertTrue(np.isfinite(entry["cd_residual"]))
            self.assertTrue(np.all(entry["u"] > 0))


if __name__ == "__main__":
    unittest.main()
