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
Named test energies with declared convex splittings.

Each entry yields a SplitEnergy through get_energy(name, **params). The
Lojasiewicz exponent at the minimizer is recorded where the energy is
analytic there.
"""

from __future__ import annotations

import math

import numpy as np

from .dc_optim import Energy, SplitEnergy, spiral_energy, spiral_gradient

# analytic exponent at the minimizer (None: not a Lojasiewicz energy)
ENERGY_THETA = {
    "quadratic": 0.5,
    "quartic": 0.25,
    "sextic": 1.0 / 6.0,
    "double_well": 0.5,
    "rosenbrock": 0.5,
    "spiral": None,
    "exp_flat": None,
}

SUPPORTED_ENERGIES = list(ENERGY_THETA)

# starting points used by the harness when a scenario gives none
DEFAULT_START = {
    "quadratic": [1.0],
    "quartic": [1.0],
    "sextic": [1.0],
    "double_well": [0.5],
    "rosenbrock": [-1.2, 1.0],
    "spiral": [1.5, 0.0],
    "exp_flat": [0.5],
}


def _sq(u):
    return float(u @ u)


def quadratic(dim=1):
    """
    H = |u|^2/2 split as H+ = |u|^2, H- = |u|^2/2.
    """
    return SplitEnergy(
        dim=dim,
        eval_Hplus=lambda u: _sq(u),
        eval_Hminus=lambda u: 0.5 * _sq(u),
        grad_Hplus=lambda u: 2.0 * u,
        grad_Hminus=lambda u: np.array(u, dtype=float),
        kappa=2.0,
        mu=1.0,
        lip_L=2.0,
        inv_grad_Hplus=lambda p: 0.5 * np.asarray(p, dtype=float),
        inv_grad_Hminus=lambda p: np.array(p, dtype=float),
        hess_Hplus=lambda u: 2.0 * np.eye(dim),
        hess_Hminus=lambda u: np.eye(dim),
        name="quadratic",
    )


def _power_energy(name, m, dim, radius):
    # H = sum u^m / m, split as H+ = H + |u|^2/2, H- = |u|^2/2
    def h(u):
        return float(np.sum(np.abs(u) ** m)) / m

    def g(u):
        return np.sign(u) * np.abs(u) ** (m - 1)

    lip = (m - 1) * radius ** (m - 2) + 1.0
    return SplitEnergy(
        dim=dim,
        eval_Hplus=lambda u: h(u) + 0.5 * _sq(u),
        eval_Hminus=lambda u: 0.5 * _sq(u),
        grad_Hplus=lambda u: g(u) + u,
        grad_Hminus=lambda u: np.array(u, dtype=float),
        kappa=1.0,
        mu=1.0,
        lip_L=lip,
        eval_H=h,
        inv_grad_Hminus=lambda p: np.array(p, dtype=float),
        hess_Hplus=lambda u: np.diag((m - 1) * np.abs(u) ** (m - 2) + 1.0),
        hess_Hminus=lambda u: np.eye(dim),
        name=name,
    )


def quartic(dim=1, radius=2.0):
    """
    H = sum u^4/4; lip_L is declared on the box |u_i| <= radius.
    """
    return _power_energy("quartic", 4, dim, radius)


def sextic(dim=1, radius=2.0):
    return _power_energy("sextic", 6, dim, radius)


def double_well(radius=2.0):
    """
    H = (x^2-1)^2/4 split as H+ = x^4/4 + x^2/2 + 1/4, H- = x^2.
    """
    return SplitEnergy(
        dim=1,
        eval_Hplus=lambda u: float(u[0] ** 4 / 4 + u[0] ** 2 / 2 + 0.25),
        eval_Hminus=lambda u: float(u[0] ** 2),
        grad_Hplus=lambda u: u**3 + u,
        grad_Hminus=lambda u: 2.0 * u,
        kappa=1.0,
        mu=2.0,
        lip_L=3 * radius**2 + 1.0,
        eval_H=lambda u: float((u[0] ** 2 - 1.0) ** 2 / 4),
        inv_grad_Hminus=lambda p: 0.5 * np.asarray(p, dtype=float),
        hess_Hplus=lambda u: np.array([[3 * u[0] ** 2 + 1.0]]),
        hess_Hminus=lambda u: np.array([[2.0]]),
        name="double_well",
    )


def _rosen(u):
    x, y = u
    return float((1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2)


def _rosen_grad(u):
    x, y = u
    return np.array([-2.0 * (1.0 - x) - 400.0 * x * (y - x * x), 200.0 * (y - x * x)])


def _rosen_hess(u):
    x, y = u
    return np.array([[2.0 - 400.0 * (y - x * x) + 800.0 * x * x, -400.0 * x], [-400.0 * x, 200.0]])


def rosenbrock(rho=1000.0):
    """
    Rosenbrock with H+ = H + rho|u|^2/2, H- = rho|u|^2/2.

    On the box [-2, 2]^2 the Hessian of H is bounded below by -798 and above
    by 5720, which gives the declared kappa and lip_L for rho = 1000.
    """
    return SplitEnergy(
        dim=2,
        eval_Hplus=lambda u: _rosen(u) + 0.5 * rho * _sq(u),
        eval_Hminus=lambda u: 0.5 * rho * _sq(u),
        grad_Hplus=lambda u: _rosen_grad(u) + rho * u,
        grad_Hminus=lambda u: rho * np.asarray(u, dtype=float),
        kappa=rho - 800.0,
        mu=rho,
        lip_L=rho + 5800.0,
        eval_H=_rosen,
        inv_grad_Hminus=lambda p: np.asarray(p, dtype=float) / rho,
        hess_Hplus=lambda u: _rosen_hess(u) + rho * np.eye(2),
        hess_Hminus=lambda u: rho * np.eye(2),
        name="rosenbrock",
    )


def spiral(rho=200.0):
    """
    The spiral energy with H+ = rho|u|^2/2; its DCA is explicit Euler with
    step 1/rho. mu is declared 0, nothing certifies a global bound.
    """
    return SplitEnergy(
        dim=2,
        eval_Hplus=lambda u: 0.5 * rho * _sq(u),
        eval_Hminus=lambda u: 0.5 * rho * _sq(u) - spiral_energy(u),
        grad_Hplus=lambda u: rho * np.asarray(u, dtype=float),
        grad_Hminus=lambda u: rho * np.asarray(u, dtype=float) - spiral_gradient(u),
        kappa=rho,
        mu=0.0,
        lip_L=rho,
        eval_H=spiral_energy,
        inv_grad_Hplus=lambda p: np.asarray(p, dtype=float) / rho,
        name="spiral",
    )


def _flat(u):
    x = float(u[0])
    return math.exp(-1.0 / (x * x)) if x != 0.0 else 0.0


def _flat_grad(u):
    x = float(u[0])
    if x == 0.0:
        return np.zeros(1)
    return np.array([2.0 / x**3 * math.exp(-1.0 / (x * x))])


def exp_flat(rho=10.0):
    """
    H = exp(-1/x^2): flat at the origin, so no Lojasiewicz exponent exists.
    """
    return SplitEnergy(
        dim=1,
        eval_Hplus=lambda u: 0.5 * rho * _sq(u),
        eval_Hminus=lambda u: 0.5 * rho * _sq(u) - _flat(u),
        grad_Hplus=lambda u: rho * np.asarray(u, dtype=float),
        grad_Hminus=lambda u: rho * np.asarray(u, dtype=float) - _flat_grad(u),
        kappa=rho,
        mu=0.0,
        lip_L=rho,
        eval_H=_flat,
        inv_grad_Hplus=lambda p: np.asarray(p, dtype=float) / rho,
        name="exp_flat",
    )


ENERGIES = {
    "quadratic": quadratic,
    "quartic": quartic,
    "sextic": sextic,
    "double_well": double_well,
    "rosenbrock": rosenbrock,
    "spiral": spiral,
    "exp_flat": exp_flat,
}


def get_energy(name, **params):
    """
    Look up a registry energy by name and build its splitting.
    """
    if name not in ENERGIES:
        raise KeyError(f"Unknown energy: {name}")
    return ENERGIES[name](**params)


def as_energy(split, lip=None):
    """
    View a splitting as a plain Energy (for the Euler and momentum helpers).
    """
    return Energy(
        dim=split.dim,
        H=split.eval_H,
        grad=split.grad,
        lip=lip if lip is not None else split.lip_L,
        name=split.name,
    )
