import unittest
import numpy as np
from gradflow_core.errors import InvalidGrid
from gradflow_core.kernels import (
    TorusGrid,
    convolve,
    convolve_direct,
    derivative,
    exponential,
    gaussian,
    get_kernel,
    is_bell_shaped,
    lorentz,
    make_kernel,
    sech2,
)


class TestTorusGrid(unittest.TestCase):
    def test_layout(self):
        grid = TorusGrid(20.0, 64)
        self.assertEqual(grid.x[32], 0.0)
        self.assertAlmostEqual(grid.x[0], -10.0)
        self.assertAlmostEqual(grid.dx, 20.0 / 64)
        self.assertAlmostEqual(grid.integrate(np.ones(64)), 20.0)

    def test_invalid(self):
        for L, n in ((0.0, 64), (20.0, 63), (20.0, 8)):
            with self.assertRaises(InvalidGrid):
                TorusGrid(L, n)


class TestKernelSpecs(unittest.TestCase):
    def test_transforms_match_quadrature(self):
        for spec in (gaussian(1.0), lorentz(1.0), sech2(1.0), exponential(2.0)):
            for k in (0.0, 0.5, 1.0):
                self.assertAlmostEqual(
                    spec.fourier_quad(k), float(spec.fourier(k)), delta=1e-7, msg=f"{spec.label()} k={k}"
                )

    def test_registry(self):
        spec = get_kernel("gaussian", sigma=2)
        self.assertEqual(spec.label(), "gaussian(sigma=2)")
        with self.assertRaises(KeyError):
            get_kernel("cauchy")
        with self.assertRaises(ValueError):
            gaussian(sigma=0.0)

    def test_lorentz_mass(self):
        kernel = make_kernel("lorentz", TorusGrid(40.0, 512), c=2.0)
        self.assertAlmostEqual(kernel.spectrum[0], 0.5)
        self.assertAlmostEqual(kernel.mass, 0.5, delta=2e-3)


class TestPeriodizedKernel(unittest.TestCase):
    def setUp(self):
        self.grid = TorusGrid(20.0, 64)
        self.kernel = make_kernel("gaussian", self.grid, sigma=1.0)

    def test_mass_and_shape(self):
        self.assertAlmostEqual(self.kernel.mass, 1.0, places=12)
        self.assertTrue(is_bell_shaped(self.kernel.values))
        full = self.kernel.full_multiplier()
        np.testing.assert_allclose(full[1:], full[1:][::-1], rtol=1e-13)

    def test_convolve_matches_direct_sum(self):
        w = 1.0 + 0.3 * np.cos(2 * np.pi * self.grid.x / self.grid.L) + 0.1 * np.sin(6 * np.pi * self.grid.x / self.grid.L)
        np.testing.assert_allclose(convolve(self.kernel, w), convolve_direct(self.kernel, w), atol=1e-12)

    def test_convolve_shape_check(self):
        with self.assertRaises(ValueError):
            convolve(self.kernel, np.ones(32))

    def test_convex_kernel_is_bell_shaped(self):
        kernel = make_kernel("exponential", TorusGrid(10.0, 128), alpha=1.0)
        self.assertTrue(is_bell_shaped(kernel.values))

    def test_not_bell_shaped(self):
        x = self.grid.x
        self.assertFalse(is_bell_shaped(np.cos(2 * np.pi * (x - 1.0) / self.grid.L)))
        self.assertFalse(is_bell_shaped(1.0 + x**2))


class TestDerivatives(unittest.TestCase):
    def setUp(self):
        self.grid = TorusGrid(20.0, 64)
        self.k = 2 * np.pi / self.grid.L
        self.u = np.sin(self.k * self.grid.x)

    def test_spectral(self):
        np.testing.assert_allclose(derivative(self.u, self.grid, 1), self.k * np.cos(self.k * self.grid.x), atol=1e-12)
        np.testing.assert_allclose(derivative(self.u, self.grid, 2), -self.k**2 * self.u, atol=1e-12)

    def test_central(self):
        approx = derivative(self.u, self.grid, 1, "central")
        np.testing.assert_allclose(approx, self.k * np.cos(self.k * self.grid.x), atol=1e-3)

    def test_unsupported(self):
        with self.assertRaises(ValueError):
            derivative(self.u, self.grid, 4, "central")
        with self.assertRaises(ValueError):
            derivative(self.u, self.grid, 1, "upwind")


if __name__ == "__main__":
    unittest.main()
