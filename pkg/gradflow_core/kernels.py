# MIT License

# Copyright (c) 2025 Abhishek Mishra (neolateral.in)

# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:

# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.

# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.

"""
Torus grids, interaction kernels and spectral operators.

A kernel is given on the real line by its closed form and Fourier transform;
periodize() folds it onto the torus of length L by summing images. The
torus convolution is a pointwise product of rfft coefficients, scaled so it
is consistent with the integral int K(x - y) w(y) dy.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from .constants import BELL_TOL, MAX_IMAGES, MIN_GRID_NODES, PERIODIZATION_TOL
from .errors import InvalidGrid, TailNotConverged

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TorusGrid:
    """
    n uniform nodes on [-L/2, L/2); node n/2 is x = 0.
    """

    L: float
    n: int

    def __post_init__(self):
        if not self.L > 0:
            raise InvalidGrid(f"Period L must be positive, got {self.L}")
        if self.n < MIN_GRID_NODES or self.n % 2:
            raise InvalidGrid(f"Node count must be even and at least {MIN_GRID_NODES}, got {self.n}")

    @property
    def dx(self):
        return self.L / self.n

    @property
    def x(self):
        return self.dx * (np.arange(self.n) - self.n // 2)

    @property
    def wavenumbers(self):
        """
        Angular wavenumbers 2 pi k / L for the rfft modes k = 0..n/2.
        """
        return 2.0 * np.pi / self.L * np.arange(self.n // 2 + 1)

    @property
    def full_wavenumbers(self):
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def integrate(self, values):
        return float(self.dx * np.sum(values))

    def l2_norm(self, values):
        return math.sqrt(self.integrate(np.asarray(values) ** 2))

    def lq_norm(self, values, q):
        return self.integrate(np.abs(values) ** q) ** (1.0 / q)


@dataclass(frozen=True)
class KernelSpec:
    """
    A kernel on the real line: closed form, Fourier transform and the tail
    integral int_R^inf K used to truncate image sums.

    convex marks kernels convex on [0, inf), whose periodizations are
    bell-shaped. multiplier is "quadrature" (the dx-scaled DFT of the
    periodized samples) or "spectral" (the analytic transform).
    """

    name: str
    params: dict
    value: Callable
    fourier: Callable
    tail_mass: Callable
    mass: float = 1.0
    convex: bool = False
    smooth: bool = True
    multiplier: str = "quadrature"

    def fourier_quad(self, k):
        """
        The transform by quadrature, 2 int_0^inf K(x) cos(k x) dx.
        """
        if k == 0:
            val, _ = integrate.quad(self.value, 0.0, np.inf)
        else:
            val, _ = integrate.quad(self.value, 0.0, np.inf, weight="cos", wvar=abs(k))
        return 2.0 * val

    def label(self):
        args = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.name}({args})"


def gaussian(sigma=1.0):
    """
    Unit mass gaussian with standard deviation sigma.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))
    return KernelSpec(
        name="gaussian",
        params={"sigma": sigma},
        value=lambda x: norm * np.exp(-0.5 * (np.asarray(x) / sigma) ** 2),
        fourier=lambda k: np.exp(-0.5 * (sigma * np.asarray(k)) ** 2),
        tail_mass=lambda r: 0.5 * special.erfc(r / (sigma * math.sqrt(2.0))),
    )


def exponential(alpha=1.0):
    """
    (alpha/2) exp(-alpha |x|), convex on [0, inf).
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return KernelSpec(
        name="exponential",
        params={"alpha": alpha},
        value=lambda x: 0.5 * alpha * np.exp(-alpha * np.abs(x)),
        fourier=lambda k: alpha**2 / (alpha**2 + np.asarray(k) ** 2),
        tail_mass=lambda r: 0.5 * math.exp(-alpha * r),
        convex=True,
        smooth=False,
    )


def _sech2_fourier(width, k):
    z = 0.5 * np.pi * width * np.abs(np.asarray(k, dtype=float))
    out = np.ones_like(z)
    nz = z > 0
    # z/sinh(z) written to avoid overflow at large z
    out[nz] = 2.0 * z[nz] * np.exp(-z[nz]) / (1.0 - np.exp(-2.0 * z[nz]))
    return out if out.ndim else float(out)


def _sech2(y):
    e = np.exp(-2.0 * np.abs(y))
    return 4.0 * e / (1.0 + e) ** 2


def sech2(width=1.0):
    """
    sech^2(x/width)/(2 width), unit mass.
    """
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    return KernelSpec(
        name="sech2",
        params={"width": width},
        value=lambda x: 0.5 / width * _sech2(np.asarray(x) / width),
        fourier=lambda k: _sech2_fourier(width, k),
        tail_mass=lambda r: 0.5 * (1.0 - math.tanh(r / width)),
    )


def lorentz(c=1.0):
    """
    The kernel with transform 1/(c + k^2), i.e. the Green's function of
    c - d^2/dx^2: exp(-sqrt(c)|x|)/(2 sqrt(c)) with mass 1/c.
    """
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    s = math.sqrt(c)
    return KernelSpec(
        name="lorentz",
        params={"c": c},
        value=lambda x: np.exp(-s * np.abs(x)) / (2.0 * s),
        fourier=lambda k: 1.0 / (c + np.asarray(k) ** 2),
        tail_mass=lambda r: math.exp(-s * r) / (2.0 * c),
        mass=1.0 / c,
        convex=True,
        smooth=False,
        multiplier="spectral",
    )


KERNELS = {
    "gaussian": gaussian,
    "exponential": exponential,
    "sech2": sech2,
    "lorentz": lorentz,
}


def get_kernel(name, **params):
    if name not in KERNELS:
        raise KeyError(f"Unknown kernel: {name}")
    return KERNELS[name](**params)


@dataclass
class PeriodizedKernel:
    """
    K_L = sum_m K(x - mL) sampled on a torus grid.

    spectrum holds the analytic transform at the rfft wavenumbers;
    multiplier is what convolve() multiplies rfft coefficients by.
    """

    grid: TorusGrid
    spec: KernelSpec
    values: np.ndarray
    images: int
    spectrum: np.ndarray = field(init=False)
    multiplier: np.ndarray = field(init=False)

    def __post_init__(self):
        self.spectrum = np.asarray(self.spec.fourier(self.grid.wavenumbers), dtype=float)
        if self.spec.multiplier == "spectral":
            self.multiplier = self.spectrum.copy()
        else:
            self.multiplier = self.grid.dx * np.fft.rfft(np.fft.ifftshift(self.values)).real

    @property
    def mass(self):
        return self.grid.integrate(self.values)

    @property
    def min_value(self):
        return float(np.min(self.values))

    def lq_norm(self, q):
        return self.grid.lq_norm(self.values, q)

    def full_multiplier(self):
        """
        The multiplier on the full fft layout (negative modes mirrored).
        """
        n = self.grid.n
        full = np.empty(n)
        full[: n // 2 + 1] = self.multiplier
        full[n // 2 + 1 :] = self.multiplier[1 : n // 2][::-1]
        return full


def periodize(spec, grid, tol=PERIODIZATION_TOL):
    """
    Sum images K(x - mL) until the bound on the remaining ones drops below
    tol, then sample on the grid.

    After the images |m| <= M the rest sit at distance at least (M + 1/2)L
    from every node, so the remainder is bounded by
    2 (K((M+1/2)L) + int_{(M+1/2)L}^inf K / L).
    """
    x = grid.x
    values = np.asarray(spec.value(x), dtype=float).copy()
    m = 0
    while True:
        r = (m + 0.5) * grid.L
        remainder = 2.0 * (float(spec.value(r)) + spec.tail_mass(r) / grid.L)
        if remainder < tol:
            break
        m += 1
        if m > MAX_IMAGES:
            raise TailNotConverged(
                f"{spec.label()} tail still {remainder:.3e} after {MAX_IMAGES} images"
            )
        values += spec.value(x - m * grid.L) + spec.value(x + m * grid.L)
    kernel = PeriodizedKernel(grid=grid, spec=spec, values=values, images=m)

    if not np.all(values > 0):
        logger.warning("%s underflows to zero on L=%g", spec.label(), grid.L)
    mirror = values[1:][::-1]
    if np.max(np.abs(values[1:] - mirror)) > 1e-12 * float(np.max(values)):
        logger.warning("%s periodization is not even to 1e-12", spec.label())
    if spec.convex and not is_bell_shaped(values):
        logger.warning("%s is convex on [0, inf) but its periodization is not bell-shaped", spec.label())
    logger.debug("Periodized %s with %d image pairs", spec.label(), m)
    return kernel


def make_kernel(name, grid, **params):
    return periodize(get_kernel(name, **params), grid)


def convolve(kernel, w):
    """
    (K_L * w)(x) = int K_L(x - y) w(y) dy, spectrally.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (kernel.grid.n,):
        raise ValueError(f"Grid function has shape {w.shape}, expected ({kernel.grid.n},)")
    return np.fft.irfft(np.fft.rfft(w) * kernel.multiplier, n=kernel.grid.n)


def convolve_direct(kernel, w):
    """
    The O(n^2) rectangle rule sum, used as the reference for convolve().
    """
    n = kernel.grid.n
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :] + n // 2) % n
    return kernel.grid.dx * kernel.values[idx] @ np.asarray(w, dtype=float)


def spectral_derivative(u, grid, order=1):
    """
    d^order u / dx^order by rfft; the Nyquist mode is dropped for odd orders.
    """
    coeffs = np.fft.rfft(u) * (1j * grid.wavenumbers) ** order
    if order % 2:
        coeffs[-1] = 0.0
    return np.fft.irfft(coeffs, n=grid.n)


def central_derivative(u, grid, order=1):
    """
    Second order central differences on the periodic grid.
    """
    dx = grid.dx
    if order == 1:
        return (np.roll(u, -1) - np.roll(u, 1)) / (2.0 * dx)
    if order == 2:
        return (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / dx**2
    if order == 3:
        return central_derivative(central_derivative(u, grid, 2), grid, 1)
    raise ValueError(f"Unsupported derivative order: {order}")


def derivative(u, grid, order=1, method="spectral"):
    if method == "spectral":
        return spectral_derivative(u, grid, order)
    if method == "central":
        return central_derivative(u, grid, order)
    raise ValueError(f"Unknown derivative method: {method}")


def is_bell_shaped(u, tol=BELL_TOL):
    """
    Even about x = 0 and nonincreasing on (0, L/2), both up to tol*max|u|.
    """
    u = np.asarray(u, dtype=float)
    n = u.size
    half = n // 2
    scale = tol * max(float(np.max(np.abs(u))), 1e-300)
    right = u[half + 1 :]
    left = u[1:half][::-1]
    if np.any(np.abs(right - left) > scale):
        return False
    # u[0] sits at x = -L/2, the far end of the right half too
    decreasing = np.concatenate([u[half:], u[:1]])
    return bool(np.all(np.diff(decreasing) <= scale))
