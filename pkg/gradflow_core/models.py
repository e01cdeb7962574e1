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
Core data models for gradflow.

The trace records are the universal currency between the schemes that
produce trajectories, the diagnostics that read them and the file manager
that writes them out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .constants import NEWTON_MAX, NEWTON_TOL, STOP_REASONS


@dataclass
class SolverConfig:
    """
    Stopping and implicit-solve controls for the DC schemes.

    tau is only read by the semi-implicit scheme.
    """

    max_iters: int = 1000
    grad_tol: float = 1e-10
    step_tol: float = 1e-15
    tau: float = 1.0
    newton_tol: float = NEWTON_TOL
    newton_max: int = NEWTON_MAX

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        for name in ("grad_tol", "step_tol", "tau", "newton_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.newton_max < 1:
            raise ValueError(f"newton_max must be at least 1, got {self.newton_max}")


@dataclass
class IterateTrace:
    """
    IterateTrace records a discrete or sampled continuous trajectory.

    step_norms is one shorter than states. For the momentum schemes `doubled`
    holds M(u^{n+1}, u^n) per step; for the dual scheme `dual_states` holds
    the p^n iterates next to the primal u^n in `states`.
    """

    states: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    step_norms: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    times: list = field(default_factory=list)
    stop_reason: Optional[str] = None
    scheme: str = ""
    doubled: list = field(default_factory=list)
    dual_states: list = field(default_factory=list)

    def record(self, u, energy, grad_norm, t=None):
        if self.states:
            self.step_norms.append(float(np.linalg.norm(u - self.states[-1])))
        self.states.append(np.array(u, dtype=float, copy=True))
        self.energies.append(float(energy))
        self.grad_norms.append(float(grad_norm))
        self.times.append(float(len(self.times) if t is None else t))

    def finish(self, stop_reason):
        if stop_reason not in STOP_REASONS:
            raise ValueError(f"Unknown stop reason: {stop_reason}")
        self.stop_reason = stop_reason

    def is_consistent(self):
        n = len(self.states)
        return (
            len(self.energies) == n
            and len(self.grad_norms) == n
            and len(self.step_norms) == max(n - 1, 0)
        )

    @property
    def final(self):
        return self.states[-1]

    def energy_array(self):
        return np.asarray(self.energies, dtype=float)

    def grad_array(self):
        return np.asarray(self.grad_norms, dtype=float)

    def step_array(self):
        return np.asarray(self.step_norms, dtype=float)

    @classmethod
    def from_samples(cls, times, states, energies, grad_norms, scheme="flow"):
        """
        Build a trace out of samples of a continuous trajectory.
        """
        trace = cls(scheme=scheme)
        for t, u, e, g in zip(times, states, energies, grad_norms):
            trace.record(np.atleast_1d(np.asarray(u, dtype=float)), e, g, t=t)
        return trace


@dataclass
class RateFit:
    """
    Result of a Lojasiewicz exponent fit.
    """

    theta: float
    c: float
    model: str
    fit_r2: float
    h_limit: float
    tail_fraction: float
    n_used: int
    theta_raw: float

    def as_dict(self):
        return {
            "theta": self.theta,
            "theta_raw": self.theta_raw,
            "c": self.c,
            "model": self.model,
            "fit_r2": self.fit_r2,
            "h_limit": self.h_limit,
            "tail_fraction": self.tail_fraction,
            "n_used": self.n_used,
        }


@dataclass
class DecayFit:
    """
    Winner of the exponential against algebraic decay comparison.

    rate is delta for exponential decay and the power p for algebraic decay.
    """

    model: str
    rate: float
    r2: float
    other_r2: float
    predicted_power: Optional[float] = None
    consistent: Optional[bool] = None


@dataclass
class LVTrace:
    """
    Trajectory of a Lotka-Volterra scheme.

    `variable` is "f" for population states and "u" for square-root states;
    energies always hold E evaluated at the population f, h_energies the
    quartic H for u-schemes.
    """

    states: list = field(default_factory=list)
    times: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    entropies: list = field(default_factory=list)
    min_components: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    h_energies: list = field(default_factory=list)
    variable: str = "f"
    scheme: str = ""
    converged: bool = False

    def populations(self):
        states = np.asarray(self.states, dtype=float)
        return states**2 if self.variable == "u" else states

    @property
    def final(self):
        return self.states[-1]


@dataclass
class FunctionalRecord:
    """
    Functionals of a torus state at time t.
    """

    t: float
    E: float
    alpha: float
    F: float
    c: float
    lp1_norm: float
    u_min: float
    u_max: float
    ux_max: float
    residual: float
    epsilon: float = 0.0
    reg_residual: float = 0.0
    uxx_max: float = 0.0
    uxxx_max: float = 0.0
    du_norm: float = 0.0


@dataclass
class CDTrace:
    """
    Trajectory of a concentration-dispersion run.

    frames are kept every `frame_every` steps when requested, with their
    times in frame_times.
    """

    records: list = field(default_factory=list)
    final: Any = None
    frames: list = field(default_factory=list)
    frame_times: list = field(default_factory=list)
    p: float = 2.0
    converged: bool = False
    monitors_armed: bool = True
    halvings: int = 0
    warnings: list = field(default_factory=list)

    def series(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=float)


@dataclass
class MonitorReport:
    """
    Named pass/fail checks plus the numbers behind them.
    """

    checks: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.checks.values())

    def merge(self, other, prefix=""):
        for key, value in other.checks.items():
            self.checks[prefix + key] = value
        for key, value in other.details.items():
            self.details[prefix + key] = value
        return self
