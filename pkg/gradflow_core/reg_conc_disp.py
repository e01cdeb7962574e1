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
Concentration-dispersion with degenerate diffusion:

    u_t = eps (u^p)_xx + K * u^p - c(t) u,
    c(t) = int u^p K * u^p - eps ((u^p)_x)^2 dx
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .conc_disp import functionals, residual
from .constants import (
    DEFAULT_CFL_SAFETY,
    MAX_HALVINGS,
    REG_CONVERGENCE_SUSTAIN,
    REG_CONVERGENCE_TOL,
)
from .errors import CFLStall, InvalidGrid, NonFinite, NonPositiveState, PositivityLost
from .kernels import convolve, derivative
from .loja_diag import classify_decay
from .models import CDTrace, FunctionalRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RegCDConfig:
    """
    epsilon = 0 is accepted and reproduces the unregularized flow.
    """

    epsilon: float
    grid: object
    p: float = 2.0
    dt_cfl_safety: float = DEFAULT_CFL_SAFETY
    derivative: str = "spectral"
    dt_max: float = 0.1
    dt_min: float = 1e-10

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if not 0 < self.dt_cfl_safety <= 1:
            raise ValueError(f"dt_cfl_safety must lie in (0, 1], got {self.dt_cfl_safety}")
        if self.derivative not in ("spectral", "central"):
            raise ValueError(f"Unknown derivative method: {self.derivative}")
        if not 0 < self.dt_min <= self.dt_max:
            raise ValueError("Need 0 < dt_min <= dt_max")

    def cfl_dt(self, u):
        """
        min(dt_max, safety dx^2 / (eps p max u^(p-1)))
        """
        if self.epsilon == 0:
            return self.dt_max
        stiff = self.epsilon * self.p * float(np.max(u)) ** (self.p - 1.0)
        return min(self.dt_max, self.dt_cfl_safety * self.grid.dx**2 / stiff)


def _parts(u, kernel, cfg):
    if not np.all(u > 0):
        idx = int(np.flatnonzero(~(u > 0))[0])
        raise NonPositiveState(f"Non-positive value at node {idx}")
    grid = kernel.grid
    w = u**cfg.p
    kw = convolve(kernel, w)
    if cfg.epsilon:
        wx = derivative(w, grid, 1, cfg.derivative)
        wxx = derivative(w, grid, 2, cfg.derivative)
    else:
        wx = wxx = np.zeros_like(w)
    c = grid.integrate(w * kw) - cfg.epsilon * grid.integrate(wx * wx)
    return w, kw, wx, wxx, c


def reg_rhs(u, kernel, cfg):
    """
    (eps (u^p)_xx + K * u^p - c u, c)
    """
    _, kw, _, wxx, c = _parts(u, kernel, cfg)
    return cfg.epsilon * wxx + kw - c * u, c


def reg_energy(u, kernel, cfg):
    """
    E = (1/2p) int u^p K * u^p - eps ((u^p)_x)^2, F = E/alpha.
    Returns (E, F, alpha).
    """
    _, _, _, _, c = _parts(u, kernel, cfg)
    E = c / (2.0 * cfg.p)
    alpha = math.exp(2.0 * cfg.p / (cfg.p + 1.0) * kernel.grid.integrate(u ** (cfg.p + 1.0)))
    return E, E / alpha, alpha


def reg_F_gradient(u, kernel, cfg):
    """
    L2 gradient of F: u^(p-1) (eps (u^p)_xx + K * u^p - c u) / alpha.
    """
    rhs, _ = reg_rhs(u, kernel, cfg)
    _, _, alpha = reg_energy(u, kernel, cfg)
    return u ** (cfg.p - 1.0) * rhs / alpha


def reg_residual(u, kernel, cfg):
    rhs, _ = reg_rhs(u, kernel, cfg)
    return kernel.grid.l2_norm(rhs)


def reg_functionals(u, kernel, cfg, t=0.0):
    grid = kernel.grid
    base = functionals(u, kernel, cfg.p, t)
    E, F, alpha = reg_energy(u, kernel, cfg)
    method = cfg.derivative
    return FunctionalRecord(
        t=float(t),
        E=E,
        alpha=alpha,
        F=F,
        c=2.0 * cfg.p * E,
        lp1_norm=base.lp1_norm,
        u_min=base.u_min,
        u_max=base.u_max,
        ux_max=float(np.max(np.abs(derivative(u, grid, 1, method)))),
        residual=base.residual,
        epsilon=cfg.epsilon,
        reg_residual=reg_residual(u, kernel, cfg),
        uxx_max=float(np.max(np.abs(derivative(u, grid, 2, method)))),
        uxxx_max=float(np.max(np.abs(derivative(u, grid, 3, method)))),
    )


def _rk4(u, kernel, cfg, dt):
    k1, _ = reg_rhs(u, kernel, cfg)
    k2, _ = reg_rhs(u + 0.5 * dt * k1, kernel, cfg)
    k3, _ = reg_rhs(u + 0.5 * dt * k2, kernel, cfg)
    k4, _ = reg_rhs(u + dt * k3, kernel, cfg)
    return u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _advance(u, kernel, cfg, dt):
    for halvings in range(MAX_HALVINGS + 1):
        h = dt / 2**halvings
        try:
            y = u
            for _ in range(2**halvings):
                y = _rk4(y, kernel, cfg, h)
                if not np.all(np.isfinite(y)):
                    raise NonFinite(f"Non-finite state after a step of {h:g}")
                if not np.all(y > 0):
                    raise NonPositiveState("step left the positive cone")
        except NonPositiveState:
            continue
        return y, halvings
    raise PositivityLost(f"Positivity lost after {MAX_HALVINGS} halvings of dt={dt:g}")


def reg_evolve(
    u0,
    kernel,
    cfg,
    t_end,
    record_every=1,
    frame_every=None,
    converge_tol=REG_CONVERGENCE_TOL,
    sustain=REG_CONVERGENCE_SUSTAIN,
    stop_on_converge=True,
):
    """
    Explicit RK4 with the degenerate-diffusion CFL step recomputed every
    step. The run is converged once |u_t|_L2 stays below converge_tol for
    `sustain` consecutive steps.

    When E(u0) <= 0 the F and E monitors are disarmed and a warning is kept
    on the trace.
    """
    u = np.asarray(u0, dtype=float).copy()
    if u.shape != (kernel.grid.n,):
        raise InvalidGrid(f"Initial state has shape {u.shape}, grid has {kernel.grid.n} nodes")
    grid = kernel.grid
    trace = CDTrace(p=cfg.p)
    first = reg_functionals(u, kernel, cfg, 0.0)
    trace.records.append(first)
    if first.E <= 0:
        msg = f"NonPositiveEnergy: E(u0)={first.E:.3e}, monotonicity monitors disarmed"
        logger.warning(msg)
        trace.warnings.append(msg)
        trace.monitors_armed = False
    if frame_every:
        trace.frames.append(u.copy())
        trace.frame_times.append(0.0)

    t = 0.0
    k = 0
    quiet = 0
    logger.info("Regularized run eps=%g on L=%g n=%d to t=%g", cfg.epsilon, grid.L, grid.n, t_end)
    while t < t_end - 1e-12:
        dt = min(cfg.cfl_dt(u), t_end - t)
        if dt < cfg.dt_min and t_end - t > cfg.dt_min:
            raise CFLStall(f"CFL step {dt:.3e} fell below dt_min={cfg.dt_min:g} at t={t:g}")
        u_next, halvings = _advance(u, kernel, cfg, dt)
        if halvings:
            trace.halvings += halvings
            logger.warning("t=%g needed %d halvings to stay positive", t, halvings)
        du = grid.l2_norm(u_next - u) / dt
        u = u_next
        t += dt
        k += 1
        quiet = quiet + 1 if du < converge_tol else 0
        if quiet >= sustain:
            trace.converged = True
        done = trace.converged and stop_on_converge
        last = done or t >= t_end - 1e-12
        if k % record_every == 0 or last:
            record = reg_functionals(u, kernel, cfg, t)
            record.du_norm = du
            trace.records.append(record)
        if frame_every and (k % frame_every == 0 or last):
            trace.frames.append(u.copy())
            trace.frame_times.append(t)
        if done:
            logger.info("Converged at t=%g after %d steps", t, k)
            break
    trace.final = u
    return trace


def reg_stability_factor(L, p, epsilon, spec, n=1, quadrature=False):
    """
    -eps p lam_n^2 + p K^(lam_n) - 1 with lam_n = 2 n pi / L.
    """
    lam = 2.0 * math.pi * n / L
    k_hat = spec.fourier_quad(lam) if quadrature else float(spec.fourier(lam))
    return -epsilon * p * lam * lam + p * k_hat - 1.0


def epsilon_continuation(eps_list, u0, kernel, p, t_end, **kwargs):
    """
    Run reg_evolve for each epsilon in turn, warm-starting from the previous
    limit. Each entry reports both residuals of the limit; the unregularized
    one should shrink like eps.
    """
    family = []
    u = np.asarray(u0, dtype=float)
    for eps in eps_list:
        cfg = RegCDConfig(epsilon=eps, grid=kernel.grid, p=p)
        trace = reg_evolve(u, kernel, cfg, t_end, **kwargs)
        u = trace.final
        family.append(
            {
                "epsilon": eps,
                "u": u.copy(),
                "converged": trace.converged,
                "reg_residual": reg_residual(u, kernel, cfg),
                "cd_residual": residual(u, kernel, p),
            }
        )
        logger.info("eps=%g: cd residual %.3e", eps, family[-1]["cd_residual"])
    return family


def decay_fit(trace, u_limit=None, tail_fraction=0.5):
    """
    Exponential against algebraic decay of |u(t) - u_limit| over the frames.
    """
    if len(trace.frames) < 2:
        raise ValueError("decay_fit needs recorded frames")
    limit = trace.frames[-1] if u_limit is None else u_limit
    return classify_decay(trace.frame_times, trace.frames, limit=limit, tail_fraction=tail_fraction)
