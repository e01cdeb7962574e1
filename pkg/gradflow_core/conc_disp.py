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
Concentration-dispersion dynamics on the torus.

    u_t = K * u^p - c(t) u,   c(t) = int u^p K * u^p dx

The flow pulls u onto the manifold int u^(p+1) = 1 and increases
F = E/alpha with E = (1/2p) int u^p K * u^p and alpha = exp((2p/(p+1)) int u^(p+1)).
Its equilibria are the periodic wave profiles K * u^p = c u, which the
Petviashvili iteration computes directly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import (
    F_MONOTONE_SLACK,
    MANIFOLD_BAND,
    MANIFOLD_SLACK,
    MAX_HALVINGS,
    PETVIASHVILI_GUARD,
    PETVIASHVILI_TOL,
)
from .errors import (
    DegenerateDenominator,
    DeltaTooLarge,
    InvalidGrid,
    NonFinite,
    NonPositiveState,
    PetviashviliDiverged,
    PositivityLost,
    SpectrumNonPositive,
)
from .kernels import convolve, is_bell_shaped, spectral_derivative
from .models import CDTrace, FunctionalRecord, MonitorReport

logger = logging.getLogger(__name__)

SUPPORTED_STEPPERS = ["rk4", "integrating_factor"]

# modes whose multiplier is below this fraction of the largest are unresolved
_RESOLVED_FRACTION = 1e-14


@dataclass(frozen=True)
class CDState:
    grid: object
    u: np.ndarray
    p: float = 2.0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.shape != (self.grid.n,):
            raise InvalidGrid(f"State has shape {u.shape}, grid has {self.grid.n} nodes")
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if not np.all(np.isfinite(u)):
            raise NonFinite("State has non-finite entries")
        if not np.all(u > 0):
            raise NonPositiveState("State must be positive")
        object.__setattr__(self, "u", u)


def _check_positive(u):
    if not np.all(u > 0):
        idx = int(np.flatnonzero(~(u > 0))[0])
        raise NonPositiveState(f"Non-positive value at node {idx}")


def _rhs(u, kernel, p):
    _check_positive(u)
    w = u**p
    kw = convolve(kernel, w)
    c = kernel.grid.integrate(w * kw)
    return kw - c * u, c


def cd_rhs(state, kernel):
    """
    (K * u^p - c u, c) for a state.
    """
    return _rhs(state.u, kernel, state.p)


def residual(u, kernel, p):
    """
    L2 norm of K * u^p - c u, taken after scaling u onto int u^(p+1) = 1 so
    that any multiple of a stationary profile scores zero.
    """
    u = normalize(np.abs(u), kernel.grid, p)
    w = u**p
    kw = convolve(kernel, w)
    c = kernel.grid.integrate(w * kw)
    return kernel.grid.l2_norm(kw - c * u)


def functionals(u, kernel, p, t=0.0):
    grid = kernel.grid
    w = u**p
    pairing = grid.integrate(w * convolve(kernel, w))
    E = pairing / (2.0 * p)
    mass = grid.integrate(u ** (p + 1))
    alpha = math.exp(2.0 * p / (p + 1.0) * mass)
    return FunctionalRecord(
        t=float(t),
        E=E,
        alpha=alpha,
        F=E / alpha,
        c=2.0 * p * E,
        lp1_norm=mass ** (1.0 / (p + 1.0)),
        u_min=float(u.min()),
        u_max=float(u.max()),
        ux_max=float(np.max(np.abs(spectral_derivative(u, grid)))),
        residual=residual(u, kernel, p),
    )


def _rk4(u, kernel, p, dt):
    k1, _ = _rhs(u, kernel, p)
    k2, _ = _rhs(u + 0.5 * dt * k1, kernel, p)
    k3, _ = _rhs(u + 0.5 * dt * k2, kernel, p)
    k4, _ = _rhs(u + dt * k3, kernel, p)
    return u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _integrating_factor(u, kernel, p, dt):
    # exponential midpoint in the variation of constants form
    grid = kernel.grid
    w = u**p
    kw = convolve(kernel, w)
    c0 = grid.integrate(w * kw)
    half = 0.5 * dt
    gain = half if c0 == 0 else -math.expm1(-c0 * half) / c0
    u_mid = math.exp(-c0 * half) * u + gain * kw
    w_mid = u_mid**p
    kw_mid = convolve(kernel, w_mid)
    c_mid = grid.integrate(w_mid * kw_mid)
    return math.exp(-c_mid * dt) * u + dt * math.exp(-c_mid * half) * kw_mid


_STEPPERS = {"rk4": _rk4, "integrating_factor": _integrating_factor}


def advance(u, kernel, p, dt, stepper="rk4"):
    """
    Advance by dt, halving the substep while positivity fails. Returns the
    new state and the halvings used.
    """
    step = _STEPPERS[stepper]
    for halvings in range(MAX_HALVINGS + 1):
        n_sub = 2**halvings
        h = dt / n_sub
        y = u
        try:
            for _ in range(n_sub):
                y = step(y, kernel, p, h)
                if not np.all(np.isfinite(y)):
                    raise NonFinite(f"Non-finite state after a step of {h:g}")
                _check_positive(y)
        except NonPositiveState:
            continue
        return y, halvings
    raise PositivityLost(f"Positivity lost after {MAX_HALVINGS} halvings of dt={dt:g}")


def evolve(
    state,
    kernel,
    dt,
    t_end,
    stepper="rk4",
    record_every=1,
    frame_every=None,
    stop_tol=None,
):
    """
    Integrate the flow from state to t_end, recording functionals every
    record_every steps and full profiles every frame_every steps.

    With stop_tol the run ends early once |u_t|_L2 drops below it.
    """
    if stepper not in _STEPPERS:
        raise ValueError(f"Unsupported stepper: {stepper}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    p = state.p
    grid = kernel.grid
    u = state.u.copy()
    trace = CDTrace(p=p)
    n_steps = int(round(t_end / dt))
    trace.records.append(functionals(u, kernel, p, 0.0))
    if frame_every:
        trace.frames.append(u.copy())
        trace.frame_times.append(0.0)
    logger.info("Evolving on L=%g n=%d with %s dt=%g to t=%g", grid.L, grid.n, stepper, dt, t_end)
    for k in range(1, n_steps + 1):
        u_next, halvings = advance(u, kernel, p, dt, stepper)
        if halvings:
            trace.halvings += halvings
            logger.warning("Step %d needed %d halvings to stay positive", k, halvings)
        du = grid.l2_norm(u_next - u) / dt
        u = u_next
        t = k * dt
        done = stop_tol is not None and du < stop_tol
        if k % record_every == 0 or k == n_steps or done:
            record = functionals(u, kernel, p, t)
            record.du_norm = du
            trace.records.append(record)
        if frame_every and (k % frame_every == 0 or k == n_steps or done):
            trace.frames.append(u.copy())
            trace.frame_times.append(t)
        if done:
            trace.converged = True
            break
    trace.final = u
    return trace


def manifold_attraction_check(trace, slack=MANIFOLD_SLACK, band=MANIFOLD_BAND):
    """
    int u^(p+1) moves towards 1 on every recorded step.

    Steps that end with |u|_{p+1} within band of 1 are not counted: there
    the mass has converged and what is left is integration error.
    """
    p = trace.p
    lp1 = trace.series("lp1_norm")
    mass = lp1 ** (p + 1.0)
    moves = np.diff(mass) * np.sign(1.0 - mass[:-1])
    moves = moves[np.abs(lp1[1:] - 1.0) > band]
    worst = float(moves.min()) if moves.size else 0.0
    return MonitorReport(
        checks={"manifold_attraction": worst >= -slack},
        details={"worst_move": worst},
    )


def functional_monitors(trace, slack=F_MONOTONE_SLACK, norm_slack=MANIFOLD_SLACK):
    """
    F nondecreasing, |u|_{p+1} monotone towards 1, E settling to a positive
    value and, when |u0|_{p+1} <= 1, E nondecreasing.

    Traces whose monitors were disarmed only get the norm checks.
    """
    F = trace.series("F")
    E = trace.series("E")
    lp1 = trace.series("lp1_norm")
    gap = np.abs(lp1 - 1.0)
    checks = {}
    details = {"lp1_gap": float(gap[-1])}
    checks["lp1_monotone"] = bool(np.all((np.diff(gap) <= norm_slack) | (gap[1:] <= MANIFOLD_BAND)))
    checks["lp1_towards_one"] = bool(gap[-1] <= gap[0] + norm_slack)
    report = MonitorReport(checks=checks, details=details)
    report.merge(manifold_attraction_check(trace, norm_slack))
    if not trace.monitors_armed:
        details["disarmed"] = True
        return report
    dF = np.diff(F)
    checks["F_monotone"] = bool(np.all(dF >= -slack * np.maximum(1.0, np.abs(F[:-1]))))
    details["worst_F_drop"] = float(-dF.min()) if dF.size else 0.0
    tail = E[int(0.9 * len(E)) :]
    spread = float(np.ptp(tail)) / max(abs(float(E[-1])), 1e-300)
    checks["E_positive"] = bool(np.all(E > 0))
    checks["E_settled"] = spread <= 1e-3
    details["E_tail_spread"] = spread
    if lp1[0] <= 1.0 + slack:
        checks["E_monotone"] = bool(np.all(np.diff(E) >= -slack * np.maximum(1.0, np.abs(E[:-1]))))
    return report


def pointwise_bounds(trace, kernel, eps=0.1):
    """
    Upper bound M = max(|u0|_inf, |K|_{p+1}/c(0)) and lower bound
    m = (1 - eps) min K / (M |K|_{(p+1)/2}).

    The upper bound needs |u0|_{p+1} <= 1. The lower bound holds after a
    transient; transient_index is the first record from which it holds.
    """
    p = trace.p
    first = trace.records[0]
    u_max = trace.series("u_max")
    u_min = trace.series("u_min")
    details = {}
    checks = {}
    M = None
    if first.lp1_norm <= 1.0 + 1e-12:
        M = max(first.u_max, kernel.lq_norm(p + 1.0) / first.c)
        over = np.flatnonzero(u_max > M * (1.0 + 1e-12))
        checks["upper"] = not over.size
        details["upper_violations"] = over.tolist()
    else:
        logger.warning("|u0|_{p+1} > 1, the explicit upper bound is unavailable")
    details["M_bound"] = M
    k_min = kernel.min_value
    m = None
    if M is not None and k_min > 0:
        m = (1.0 - eps) * k_min / (M * kernel.lq_norm(0.5 * (p + 1.0)))
        below = u_min < m
        if below.any():
            last_bad = int(np.flatnonzero(below)[-1])
            transient = last_bad + 1 if last_bad + 1 < len(u_min) else None
        else:
            transient = 0
        checks["lower"] = transient is not None
        details["transient_index"] = transient
    details["m_bound"] = m
    return MonitorReport(checks=checks, details=details)


def constant_equilibrium(L, p):
    """
    The constant state with L u^(p+1) = 1.
    """
    return L ** (-1.0 / (p + 1.0))


def mode_factor(L, p, spec, n=1, quadrature=False):
    """
    p K^(2 n pi / L) - 1, the sign of the mode n eigenvalue at the constant.
    """
    lam = 2.0 * math.pi * n / L
    k_hat = spec.fourier_quad(lam) if quadrature else float(spec.fourier(lam))
    return p * k_hat - 1.0


def mode1_factor(L, p, spec, quadrature=False):
    return mode_factor(L, p, spec, 1, quadrature)


def stability_spectrum(L, p, spec, n_modes, quadrature=False):
    """
    Eigenvalues of the Hessian of F at the constant equilibrium: the
    constant mode first, then modes 1..n_modes. Positive entries are
    unstable directions.
    """
    u_bar = constant_equilibrium(L, p)
    scale = math.exp(-2.0 * p / (p + 1.0)) * u_bar ** (2.0 * p - 2.0)
    values = [-scale * (p + 1.0)]
    for n in range(1, n_modes + 1):
        values.append(scale * mode_factor(L, p, spec, n, quadrature))
    return values


def seed_initial(grid, p, delta, normalize_state=False):
    """
    u0 = u_bar + delta cos(2 pi x / L), optionally rescaled onto
    int u^(p+1) = 1.
    """
    u_bar = constant_equilibrium(grid.L, p)
    if not abs(delta) < u_bar:
        raise DeltaTooLarge(f"|delta|={abs(delta):g} must be below u_bar={u_bar:.6g}")
    u = u_bar + delta * np.cos(2.0 * math.pi * grid.x / grid.L)
    if normalize_state:
        u = normalize(u, grid, p)
    return CDState(grid=grid, u=u, p=p)


def normalize(u, grid, p):
    return np.asarray(u, dtype=float) / grid.lq_norm(u, p + 1.0)


def align(u, ref):
    """
    Translate u onto ref by the peak of their circular cross-correlation.
    """
    corr = np.fft.irfft(np.fft.rfft(ref) * np.conj(np.fft.rfft(u)), n=len(u))
    return np.roll(u, int(np.argmax(corr)))


@dataclass
class PetviashviliResult:
    u: np.ndarray
    iterations: int
    converged: bool
    stabilizers: list = field(default_factory=list)
    changes: list = field(default_factory=list)
    residual: float = float("nan")


def _resolved(mult):
    if np.any(mult < -_RESOLVED_FRACTION * float(np.max(np.abs(mult)))):
        raise SpectrumNonPositive("Kernel spectrum has negative modes")
    return mult > _RESOLVED_FRACTION * float(np.max(mult))


def petviashvili_step(u, kernel, p, gamma):
    """
    u_next = M^gamma K (|u|^p) with the stabilizing factor
    M = sum |u_k|^2 / K_k over Re sum u_k conj((|u|^p)_k), summed over the
    resolved modes. Returns (u_next, M).
    """
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        raise DegenerateDenominator("Petviashvili iterate is identically zero")
    mult = kernel.full_multiplier()
    resolved = _resolved(mult)
    u_hat = np.fft.fft(u)
    w_hat = np.fft.fft(np.abs(u) ** p)
    num = float(np.sum(np.abs(u_hat[resolved]) ** 2 / mult[resolved]))
    den = float(np.real(np.sum(u_hat[resolved] * np.conj(w_hat[resolved]))))
    if not den > 1e-300 * max(num, 1.0):
        raise DegenerateDenominator(f"Stabilizer denominator is {den:.3e}")
    M = num / den
    nxt = np.zeros_like(u_hat)
    nxt[resolved] = M**gamma * mult[resolved] * w_hat[resolved]
    return np.real(np.fft.ifft(nxt)), M


def petviashvili_solve(u0, kernel, p, gamma, tol=PETVIASHVILI_TOL, max_iter=2000):
    """
    Iterate petviashvili_step until the sup change falls below tol relative
    to the sup of the iterate. Raises PetviashviliDiverged when the amplitude
    leaves [1e-8, 1e8] times its start.
    """
    u = np.asarray(u0, dtype=float).copy()
    start = float(np.max(np.abs(u)))
    result = PetviashviliResult(u=u, iterations=0, converged=False)
    for it in range(1, max_iter + 1):
        u_next, M = petviashvili_step(u, kernel, p, gamma)
        amp = float(np.max(np.abs(u_next)))
        if not np.isfinite(amp) or amp > PETVIASHVILI_GUARD * start or amp < start / PETVIASHVILI_GUARD:
            raise PetviashviliDiverged(f"Amplitude {amp:.3e} left the guard band at iteration {it}")
        change = float(np.max(np.abs(u_next - u))) / amp
        result.stabilizers.append(M)
        result.changes.append(change)
        u = u_next
        result.iterations = it
        if change < tol:
            result.converged = True
            break
    result.u = u
    result.residual = residual(u, kernel, p)
    logger.info(
        "Petviashvili gamma=%g stopped after %d iterations (converged=%s)",
        gamma,
        result.iterations,
        result.converged,
    )
    return result


def frames_bell_shaped(trace, tol=1e-8):
    """
    Indices of recorded frames that are not bell-shaped.
    """
    return [k for k, frame in enumerate(trace.frames) if not is_bell_shaped(frame, tol)]
