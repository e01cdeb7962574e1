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
Lotka-Volterra dynamics with symmetric interactions.

The population flow f' = d f (a - B f) is a gradient ascent of the energy
E(f) = <a, f> - <f, B f>/2 in the Shahshahani metric. With u = sqrt(f) it
becomes the descent of the quartic H(u) = -E(u^2)/2, which the convex
splitting B = B+ - B- turns into positivity-preserving schemes that need only
scalar cubic solves.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from .constants import (
    CUBIC_RESIDUAL,
    DEFAULT_EPS_FRACTION,
    EXTINCTION_TOL,
    K_SET_TOL,
    MAX_HALVINGS,
    MONOTONE_SLACK,
    POWER_ITERATION_MAX,
    POWER_ITERATION_TOL,
    PSD_TOL,
    S_FIXED_POINT_MAX,
    S_FIXED_POINT_TOL,
)
from .dc_optim import SplitEnergy, solve_gradient_equation
from .errors import (
    InvalidSplitting,
    InvalidSystem,
    NonPositiveState,
    NotSymmetric,
    PositivityLost,
    SFixedPointStalled,
    TauTooLarge,
)
from .models import LVTrace, MonitorReport

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LVSystem:
    """
    Growth rates a, symmetric interaction B and metric weights d.
    """

    a: np.ndarray
    B: np.ndarray
    d: np.ndarray
    name: str = ""

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        n = a.size
        if B.shape != (n, n) or d.shape != (n,):
            raise InvalidSystem(f"Shape mismatch: a {a.shape}, B {B.shape}, d {d.shape}")
        if np.any(a <= 0):
            raise InvalidSystem("Growth rates a must be positive")
        if np.any(d <= 0):
            raise InvalidSystem("Metric weights d must be positive")
        if np.max(np.abs(B - B.T)) >= 1e-12:
            raise NotSymmetric("Interaction matrix B must be symmetric")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "d", d)

    @property
    def n(self):
        return self.a.size

    @property
    def competitive(self):
        return bool(self.B.min() > 0)


@dataclass(frozen=True)
class LVSplitting:
    """
    B = Bplus - Bminus with Bplus = lam I + beta 11^T; both parts entrywise
    nonnegative and positive semidefinite.
    """

    lam: float
    beta: float
    Bplus: np.ndarray
    Bminus: np.ndarray


@dataclass(frozen=True)
class EntropySpec:
    """
    Relative entropy to a reference state f_tilde (zeros allowed).

    quad_coeff adds quad_coeff*|f - f_tilde|^2, the modification used for the
    discrete scheme.
    """

    f_tilde: np.ndarray
    w: np.ndarray
    quad_coeff: float = 0.0

    def __post_init__(self):
        f_tilde = np.atleast_1d(np.asarray(self.f_tilde, dtype=float))
        w = np.atleast_1d(np.asarray(self.w, dtype=float))
        if np.any(w <= 0):
            raise InvalidSystem("Entropy weights must be positive")
        if np.any(f_tilde < 0):
            raise InvalidSystem("Reference state must be nonnegative")
        if self.quad_coeff < 0:
            raise InvalidSystem("quad_coeff must be nonnegative")
        object.__setattr__(self, "f_tilde", f_tilde)
        object.__setattr__(self, "w", w)

    @classmethod
    def for_system(cls, sys, f_tilde, quad_coeff=0.0):
        f_tilde = np.array(f_tilde, dtype=float)
        f_tilde[f_tilde < EXTINCTION_TOL] = 0.0
        return cls(f_tilde=f_tilde, w=1.0 / sys.d, quad_coeff=quad_coeff)


@dataclass(frozen=True)
class ShahshahaniBound:
    """
    Feasible box radius, M_eps and the step size bound 1/(|d|_inf M_eps).
    """

    box: float
    M_eps: float
    tau_max: float


def _positive(x, label="state"):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(x > 0):
        idx = int(np.flatnonzero(~(x > 0))[0])
        raise NonPositiveState(f"{label} has a non-positive entry at index {idx}")
    return x


def lv_rhs(sys, f):
    """
    f'_i = d_i f_i (a - B f)_i
    """
    f = _positive(f)
    return sys.d * f * (sys.a - sys.B @ f)


def energy_E(sys, f):
    f = np.atleast_1d(np.asarray(f, dtype=float))
    return float(sys.a @ f - 0.5 * f @ sys.B @ f)


def entropy_F(spec, f):
    """
    F(f) = sum w_i (ft_i log(ft_i/f_i) + f_i - ft_i) + quad_coeff |f - ft|^2,
    with ft_i log(ft_i/f_i) = 0 where ft_i = 0.
    """
    f = _positive(f)
    ft = spec.f_tilde
    log_term = np.zeros_like(f)
    support = ft > 0
    log_term[support] = ft[support] * np.log(ft[support] / f[support])
    diff = f - ft
    return float(spec.w @ (log_term + diff) + spec.quad_coeff * diff @ diff)


def equilibrium_residual(sys, f):
    """
    |diag(f)(a - B f)|_inf, zero at every fixed point of the flow.
    """
    f = np.atleast_1d(np.asarray(f, dtype=float))
    return float(np.max(np.abs(f * (sys.a - sys.B @ f))))


def sqrt_rhs(sys, u):
    """
    u'_i = d_i u_i (a - B u^2)_i / 2 = -d_i grad H(u)_i
    """
    u = _positive(u)
    return 0.5 * sys.d * u * (sys.a - sys.B @ (u * u))


def quartic_H(sys, u):
    """
    H(u) = -sum a u^2 / 4 + (u^2)^T B u^2 / 8
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    s = u * u
    return float(-0.25 * sys.a @ s + 0.125 * s @ sys.B @ s)


def quartic_grad(sys, u):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return -0.5 * u * (sys.a - sys.B @ (u * u))


def _rk4_step(rhs, x, dt):
    k1 = rhs(x)
    k2 = rhs(x + 0.5 * dt * k1)
    k3 = rhs(x + 0.5 * dt * k2)
    k4 = rhs(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk4_positive(rhs, x, dt):
    """
    Advance by dt, halving the substep while any stage leaves the positive
    orthant. Returns the new state and the number of halvings used.
    """
    for halvings in range(MAX_HALVINGS + 1):
        n_sub = 2**halvings
        h = dt / n_sub
        y = x
        try:
            for _ in range(n_sub):
                y = _rk4_step(rhs, y, h)
                if not np.all(y > 0) or not np.all(np.isfinite(y)):
                    raise NonPositiveState("substep left the positive orthant")
        except NonPositiveState:
            continue
        if halvings:
            logger.warning("Positivity kept by halving dt=%g %d times", dt, halvings)
        return y, halvings
    bad = int(np.argmin(x))
    raise PositivityLost(f"Positivity lost after {MAX_HALVINGS} halvings of dt={dt:g}", index=bad)


def _record_lv(trace, sys, state, t):
    square = trace.variable == "u"
    f = state * state if square else state
    f_prev = None
    if trace.states:
        f_prev = trace.states[-1] ** 2 if square else trace.states[-1]
    trace.states.append(np.array(state, dtype=float, copy=True))
    trace.times.append(float(t))
    trace.energies.append(energy_E(sys, f))
    trace.min_components.append(float(np.min(f)))
    trace.ratios.append(0.0 if f_prev is None else float(np.max(np.abs(f / f_prev - 1.0))))
    if trace.variable == "u":
        trace.h_energies.append(quartic_H(sys, state))


def fill_entropies(trace, sys, spec=None):
    """
    Evaluate F along a trace; the reference defaults to the final state with
    extinct species set to zero.
    """
    pops = trace.populations()
    if spec is None:
        spec = EntropySpec.for_system(sys, pops[-1])
    trace.entropies = [entropy_F(spec, f) for f in pops]
    return trace


def _integrate(sys, x0, dt, t_end, variable, record_every):
    rhs = (lambda x: lv_rhs(sys, x)) if variable == "f" else (lambda x: sqrt_rhs(sys, x))
    x = _positive(x0, "initial state").copy()
    trace = LVTrace(variable=variable, scheme="rk4")
    n_steps = int(round(t_end / dt))
    _record_lv(trace, sys, x, 0.0)
    for k in range(n_steps):
        x, _ = _rk4_positive(rhs, x, dt)
        if (k + 1) % record_every == 0 or k + 1 == n_steps:
            _record_lv(trace, sys, x, (k + 1) * dt)
    trace.converged = equilibrium_residual(sys, trace.populations()[-1]) < 1e-8
    return fill_entropies(trace, sys)


def integrate_continuous(sys, f0, dt, t_end, record_every=1):
    """
    RK4 trajectory of the population flow with adaptive halving when a step
    would leave the positive orthant.
    """
    logger.info("Integrating %s to t=%g with dt=%g", sys.name or "system", t_end, dt)
    return _integrate(sys, f0, dt, t_end, "f", record_every)


def integrate_sqrt(sys, u0, dt, t_end, record_every=1):
    """
    RK4 trajectory of the square-root flow; states are u, energies E(u^2).
    """
    return _integrate(sys, u0, dt, t_end, "u", record_every)


def admissible_tau(sys, lam, eps=None):
    """
    Interval bound on M_eps = max over the feasible box of |a - B f|_inf and
    the implied step size bound. Returns None when B has a non-positive
    entry, where the box is not defined.
    """
    if not sys.competitive:
        return None
    a_inf = float(np.max(np.abs(sys.a)))
    eps = DEFAULT_EPS_FRACTION * a_inf if eps is None else eps
    box = (1.0 / lam + 1.0 / float(sys.B.min())) * a_inf + eps
    m_eps = a_inf + float(np.max(np.sum(np.abs(sys.B), axis=1))) * box
    return ShahshahaniBound(box=box, M_eps=m_eps, tau_max=1.0 / (float(np.max(sys.d)) * m_eps))


def _shahshahani_update(sys, lam, tau, f):
    damp = 1.0 + tau * lam * sys.d * f
    f_next = f * (damp + tau * sys.d * (sys.a - sys.B @ f)) / damp
    if not np.all(f_next > 0):
        idx = int(np.flatnonzero(~(f_next > 0))[0])
        raise PositivityLost(f"Shahshahani step lost positivity at index {idx}", index=idx)
    return f_next


def discrete_step_shahshahani(sys, lam, tau, f, eps=None):
    """
    f_next = f (1 + tau lam d f + tau d (a - B f)) / (1 + tau lam d f).

    Raises TauTooLarge outside the admissible step sizes; for non-competitive
    systems no bound is available and the step is taken unchecked.
    """
    f = _positive(f)
    bound = admissible_tau(sys, lam, eps)
    if bound is None:
        logger.warning("No M_eps bound for a non-competitive system, tau=%g unchecked", tau)
    elif not tau < bound.tau_max:
        raise TauTooLarge(f"tau={tau:g} must be below {bound.tau_max:.6g}")
    return _shahshahani_update(sys, lam, tau, f)


def run_discrete(sys, f0, tau, lam=None, max_iters=10000, step_tol=1e-14, eps=None):
    """
    Iterate the Shahshahani scheme. lam defaults to the spectral radius of B.
    """
    rho = spectral_radius(sys.B)
    lam = rho if lam is None else lam
    if lam < rho * (1.0 - 1e-12):
        raise InvalidSystem(f"lam={lam:g} is below the spectral radius {rho:g}")
    bound = admissible_tau(sys, lam, eps)
    if bound is None:
        logger.warning("No M_eps bound for a non-competitive system, tau=%g unchecked", tau)
    elif not tau < bound.tau_max:
        raise TauTooLarge(f"tau={tau:g} must be below {bound.tau_max:.6g}")
    f = _positive(f0, "initial state").copy()
    trace = LVTrace(variable="f", scheme="shahshahani")
    _record_lv(trace, sys, f, 0.0)
    for k in range(max_iters):
        f_next = _shahshahani_update(sys, lam, tau, f)
        step = float(np.max(np.abs(f_next - f)))
        f = f_next
        _record_lv(trace, sys, f, (k + 1) * tau)
        if step < step_tol:
            trace.converged = True
            break
    logger.info("Shahshahani scheme stopped after %d steps", len(trace.states) - 1)
    return fill_entropies(trace, sys, EntropySpec.for_system(sys, f, quad_coeff=0.5 * lam * tau))


def shahshahani_properties(trace, sys, lam, tau, eps=None, slack=MONOTONE_SLACK):
    """
    Feasibility, ratio bound, E monotonicity and the weighted l2 partial sums
    along a Shahshahani trace.
    """
    pops = trace.populations()
    energies = np.asarray(trace.energies, dtype=float)
    bound = admissible_tau(sys, lam, eps)
    checks = {}
    details = {}
    if bound is not None:
        checks["feasibility"] = bool(np.all(np.max(pops, axis=1) <= bound.box))
        limit = tau * float(np.max(sys.d)) * bound.M_eps
        checks["ratio_bound"] = bool(np.max(trace.ratios) <= limit * (1.0 + 1e-12))
        details["ratio_limit"] = limit
        details["M_eps"] = bound.M_eps
    else:
        details["M_eps"] = None
    checks["energy_monotone"] = bool(np.all(np.diff(energies) >= -slack))
    weighted = np.sum((pops[1:] - pops[:-1]) ** 2 / (tau * sys.d * pops[:-1]), axis=1)
    partial = np.cumsum(weighted)
    l2_bound = energies[-1] - energies[0] + 1e-8
    checks["l2_summable"] = bool(np.all(partial <= l2_bound))
    details["l2_sum"] = float(partial[-1]) if partial.size else 0.0
    details["energy_gain"] = float(energies[-1] - energies[0])
    return MonitorReport(checks=checks, details=details)


def lv_monitors(trace, slack=MONOTONE_SLACK):
    """
    Positivity and E nondecreasing along any LV trace.
    """
    energies = np.asarray(trace.energies, dtype=float)
    drops = -np.diff(energies)
    worst = float(drops.max()) if drops.size else 0.0
    return MonitorReport(
        checks={
            "positivity": bool(np.all(np.asarray(trace.min_components) > 0)),
            "energy_monotone": worst <= slack * max(1.0, float(np.max(np.abs(energies)))),
        },
        details={"worst_energy_drop": worst},
    )


def entropy_trap_monitor(sys, trace, f_tilde=None, spec=None, slack=1e-10):
    """
    Entropy trapping diagnostics around a candidate limit f_tilde.

    With K the species where a - B f_tilde does not vanish, Q(f) their total
    population and Z(f) = min over K of d_i (a - B f)_i^2, the entropy obeys
    dF <= (2M/z) dE wherever Z > z/2. The inequality is checked step by step
    on the second half of the trace inside that neighbourhood.
    """
    pops = trace.populations()
    f_tilde = pops[-1] if f_tilde is None else np.asarray(f_tilde, dtype=float)
    spec = spec or EntropySpec.for_system(sys, f_tilde)
    gap = sys.a - sys.B @ spec.f_tilde
    K = np.flatnonzero(np.abs(gap) > K_SET_TOL)
    if K.size:
        Q = pops[:, K].sum(axis=1)
        Z = np.min(sys.d[K] * (sys.a[K] - pops @ sys.B[K].T) ** 2, axis=1)
        z = float(np.min(sys.d[K] * gap[K] ** 2))
        M = float(np.max(np.abs(gap[K])))
    else:
        Q = np.zeros(len(pops))
        Z = np.ones(len(pops))
        z, M = 1.0, 0.0
    F = np.array([entropy_F(spec, f) for f in pops])
    E = np.asarray(trace.energies, dtype=float)
    dF = np.diff(F)
    dE = np.diff(E)
    ratio = 2.0 * M / z
    start = len(dF) // 2
    tail = [k for k in range(start, len(dF)) if Z[k] >= 0.5 * z]
    violations = [k for k in tail if dF[k] > ratio * dE[k] + slack * max(1.0, abs(F[k]))]
    increases = int(np.sum(dF > slack))
    if increases:
        logger.info("Entropy increased on %d steps", increases)
    return MonitorReport(
        checks={"trapped": not violations},
        details={
            "K": K.tolist(),
            "M": M,
            "z": z,
            "Q": Q.tolist(),
            "Z": Z.tolist(),
            "F": F.tolist(),
            "violations": violations,
            "transient_increases": increases,
            "tail_steps": len(tail),
        },
    )


def spectral_radius(B, tol=POWER_ITERATION_TOL, max_iter=POWER_ITERATION_MAX):
    """
    Spectral radius of a symmetric matrix by power iteration on B^2 from the
    normalized ones vector, with Rayleigh quotient stopping. Falls back to a
    dense eigensolver when the iteration stalls or lands below the cheap lower
    bound max(max|B_ii|, |B|_F/sqrt(n)).
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n = B.shape[0]
    lower = max(float(np.max(np.abs(np.diag(B)))), float(np.linalg.norm(B)) / np.sqrt(n))
    B2 = B @ B
    v = np.ones(n) / np.sqrt(n)
    rq = float(v @ B2 @ v)
    found = None
    for _ in range(max_iter):
        w = B2 @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            break
        v = w / norm
        rq_next = float(v @ B2 @ v)
        if abs(rq_next - rq) <= tol * max(rq_next, 1e-300):
            found = np.sqrt(rq_next)
            break
        rq = rq_next
    if found is None or found < lower * (1.0 - 1e-9):
        logger.debug("Power iteration fell back to eigvalsh")
        found = float(np.max(np.abs(linalg.eigvalsh(B))))
    return float(found)


def build_splitting(B):
    """
    Split B as B+ - B- with B+ = lam I + beta 11^T, lam the spectral radius
    and beta the largest nonnegative off-diagonal entry.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if B.shape[0] != B.shape[1] or np.max(np.abs(B - B.T)) >= 1e-12:
        raise NotSymmetric("Interaction matrix B must be symmetric")
    n = B.shape[0]
    lam = spectral_radius(B)
    off = B[~np.eye(n, dtype=bool)]
    beta = max(0.0, float(off.max())) if off.size else 0.0

    def assemble(lam_value):
        bplus = lam_value * np.eye(n) + beta * np.ones((n, n))
        return bplus, bplus - B

    Bplus, Bminus = assemble(lam)
    if min(linalg.eigvalsh(Bminus)) < -PSD_TOL:
        lam = float(np.max(np.abs(linalg.eigvalsh(B))))
        Bplus, Bminus = assemble(lam)
    if np.any(Bminus < -PSD_TOL) or min(linalg.eigvalsh(Bminus)) < -PSD_TOL:
        raise InvalidSplitting("B- is not nonnegative and positive semidefinite")
    return LVSplitting(lam=lam, beta=beta, Bplus=Bplus, Bminus=Bminus)


def _bisect_cubic(A, C, v, hi, iters=200):
    lo = np.zeros_like(hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        above = A * mid**3 + C * mid > v
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return 0.5 * (lo + hi)


def cubic_solve_monotone(A, C, v, tol=CUBIC_RESIDUAL, max_iter=100):
    """
    The nonnegative root of A x^3 + C x = v for A > 0, C >= 0, v >= 0.

    Works elementwise on arrays. Newton starts at max(v/max(A, C), 1), which
    is to the right of the root, so the iterates decrease monotonically;
    entries that miss the residual tolerance are finished by bisection.
    """
    A_arr, C_arr, v_arr = np.broadcast_arrays(
        np.asarray(A, dtype=float), np.asarray(C, dtype=float), np.asarray(v, dtype=float)
    )
    scalar = A_arr.ndim == 0
    A_arr, C_arr, v_arr = (np.atleast_1d(z).astype(float) for z in (A_arr, C_arr, v_arr))
    if np.any(A_arr <= 0) or np.any(C_arr < 0) or np.any(v_arr < 0):
        raise ValueError("cubic_solve_monotone needs A > 0, C >= 0 and v >= 0")
    x0 = np.maximum(v_arr / np.maximum(C_arr, A_arr), 1.0)
    x = x0.copy()
    scale = tol * np.maximum(1.0, v_arr)
    for _ in range(max_iter):
        res = A_arr * x**3 + C_arr * x - v_arr
        done = np.abs(res) <= scale
        if done.all():
            break
        slope = 3.0 * A_arr * x * x + C_arr
        step = np.divide(res, slope, out=np.zeros_like(res), where=slope > 0)
        x = np.where(done, x, np.maximum(x - step, 0.0))
    bad = np.abs(A_arr * x**3 + C_arr * x - v_arr) > scale
    if bad.any():
        x[bad] = _bisect_cubic(A_arr[bad], C_arr[bad], v_arr[bad], x0[bad])
    return float(x[0]) if scalar else x


def cubic_solve_odd(A, C, v):
    """
    The real root of the odd increasing cubic A x^3 + C x = v for any sign of
    v. A = 0 reduces to the linear solve x = v/C.
    """
    A_arr, C_arr, v_arr = np.broadcast_arrays(
        np.asarray(A, dtype=float), np.asarray(C, dtype=float), np.asarray(v, dtype=float)
    )
    scalar = A_arr.ndim == 0
    A_arr, C_arr, v_arr = (np.atleast_1d(z).astype(float) for z in (A_arr, C_arr, v_arr))
    if np.any(A_arr < 0) or np.any(C_arr < 0) or np.any((A_arr == 0) & (C_arr == 0)):
        raise ValueError("cubic_solve_odd needs A >= 0, C >= 0, not both zero")
    x = np.empty_like(v_arr)
    linear = A_arr == 0
    x[linear] = v_arr[linear] / C_arr[linear]
    cubic = ~linear
    if cubic.any():
        x[cubic] = np.sign(v_arr[cubic]) * cubic_solve_monotone(
            A_arr[cubic], C_arr[cubic], np.abs(v_arr[cubic])
        )
    return float(x[0]) if scalar else x


def _solve_coupled(A, c0, c1, v, s0):
    """
    Solve A_i x_i^3 + (c0_i + c1_i S) x_i = v_i with S = sum x_i^2.

    Outer fixed point on S (damped by 1/2 once it oscillates), then brentq on
    S - G(S) over [0, G(0)] where G is decreasing.
    """
    if np.all(c1 == 0):
        return cubic_solve_monotone(A, c0, v)

    def G(S):
        x = cubic_solve_monotone(A, c0 + c1 * S, v)
        return float(x @ x), x

    S = s0
    omega = 1.0
    prev = None
    for _ in range(S_FIXED_POINT_MAX):
        g, x = G(S)
        diff = g - S
        if abs(diff) <= S_FIXED_POINT_TOL * max(1.0, S):
            return x
        if prev is not None and diff * prev < 0 and omega == 1.0:
            logger.debug("S iteration oscillates, damping by 1/2")
            omega = 0.5
        S += omega * diff
        prev = diff
    hi = G(0.0)[0]
    logger.debug("S iteration did not settle, bracketing on [0, %g]", hi)
    try:
        S = optimize.brentq(lambda s: s - G(s)[0], 0.0, hi, xtol=1e-15, rtol=1e-14)
    except (ValueError, RuntimeError) as exc:
        raise SFixedPointStalled(f"S fixed point did not converge: {exc}") from exc
    return G(S)[1]


def dca_lv_step(split, sys, u):
    """
    One DCA step for the quartic energy: lam u^3 + beta S u = u (a + B- u^2)
    coordinatewise, S the squared norm of the new state.
    """
    u = _positive(u)
    v = u * (sys.a + split.Bminus @ (u * u))
    n = u.size
    return _solve_coupled(
        np.full(n, split.lam), np.zeros(n), np.full(n, split.beta), v, float(u @ u)
    )


def semi_implicit_lv_step(split, sys, tau, u):
    """
    tau d lam x^3 + (2 + tau d beta S) x = 2u + tau d u (a + B- u^2).
    Positive for every tau > 0.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    u = _positive(u)
    td = tau * sys.d
    v = 2.0 * u + td * u * (sys.a + split.Bminus @ (u * u))
    return _solve_coupled(td * split.lam, np.full(u.size, 2.0), td * split.beta, v, float(u @ u))


def _run_u_scheme(step, sys, u0, max_iters, step_tol, scheme):
    u = _positive(u0, "initial state").copy()
    trace = LVTrace(variable="u", scheme=scheme)
    _record_lv(trace, sys, u, 0.0)
    for k in range(max_iters):
        u_next = step(u)
        moved = float(np.max(np.abs(u_next - u)))
        u = u_next
        _record_lv(trace, sys, u, k + 1)
        if moved < step_tol:
            trace.converged = True
            break
    logger.info("%s stopped after %d steps", scheme, len(trace.states) - 1)
    return fill_entropies(trace, sys)


def run_dca_lv(sys, u0, split=None, max_iters=5000, step_tol=1e-14):
    split = split or build_splitting(sys.B)
    return _run_u_scheme(lambda u: dca_lv_step(split, sys, u), sys, u0, max_iters, step_tol, "dca_lv")


def run_semi_implicit_lv(sys, u0, tau, split=None, max_iters=5000, step_tol=1e-14):
    split = split or build_splitting(sys.B)
    return _run_u_scheme(
        lambda u: semi_implicit_lv_step(split, sys, tau, u),
        sys,
        u0,
        max_iters,
        step_tol,
        "semi_implicit_lv",
    )


def lv_quartic_split(sys, split=None, radius=2.0):
    """
    The quartic H as a SplitEnergy:
    H+ = (u^2)^T B+ u^2 / 8, H- = sum a u^2 / 4 + (u^2)^T B- u^2 / 8.

    grad H+ is inverted by the coupled cubic solve, so the generic DCA step
    reproduces dca_lv_step. lip_L holds on the box |u_i| <= radius.
    """
    split = split or build_splitting(sys.B)
    n = sys.n
    bplus, bminus, a = split.Bplus, split.Bminus, sys.a

    def inv_plus(p):
        # 1/2 (lam x^3 + beta S x) = p
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if np.all(p >= 0):
            return _solve_coupled(
                np.full(n, split.lam), np.zeros(n), np.full(n, split.beta), 2.0 * p, float(p @ p)
            )
        x, _ = solve_gradient_equation(
            lambda z: 0.5 * z * (bplus @ (z * z)), p, np.sign(p), hess=hess_plus
        )
        return x

    def hess_plus(u):
        return 0.5 * (np.diag(bplus @ (u * u)) + 2.0 * np.outer(u, u) * bplus)

    def hess_minus(u):
        return 0.5 * np.diag(a) + 0.5 * (np.diag(bminus @ (u * u)) + 2.0 * np.outer(u, u) * bminus)

    lip = 1.5 * float(np.max(np.sum(bplus, axis=1))) * radius**2
    return SplitEnergy(
        dim=n,
        eval_Hplus=lambda u: float(0.125 * (u * u) @ bplus @ (u * u)),
        eval_Hminus=lambda u: float(0.25 * a @ (u * u) + 0.125 * (u * u) @ bminus @ (u * u)),
        grad_Hplus=lambda u: 0.5 * u * (bplus @ (u * u)),
        grad_Hminus=lambda u: 0.5 * u * (a + bminus @ (u * u)),
        kappa=0.0,
        mu=0.5 * float(a.min()),
        lip_L=lip,
        eval_H=lambda u: quartic_H(sys, u),
        inv_grad_Hplus=inv_plus,
        hess_Hplus=hess_plus,
        hess_Hminus=hess_minus,
        name=f"{sys.name or 'lv'}:quartic",
    )


def reg_lv_rhs(grad_H, mu, nu, f):
    """
    f'_i = -f_i/(mu + nu f_i) grad H(f)_i
    """
    f = _positive(f)
    return -f / (mu + nu * f) * grad_H(f)


def reg_lv_desing_rhs(grad_H, mu, nu, u):
    """
    The same flow in u = sqrt(f): u'_i = -grad Hhat(u)_i/(4mu + 4nu u_i^2)
    with Hhat(u) = H(u^2), so grad Hhat(u) = 2u grad H(u^2).
    """
    u = _positive(u)
    return -2.0 * u * grad_H(u * u) / (4.0 * mu + 4.0 * nu * u * u)


def reg_lv_mirror_step(grad_H, mu, nu, tau, u, mode="euler", split=None):
    """
    Mirror step with g(u) = mu|u|^2/2 + nu sum u^4/12, grad g = mu u + nu u^3/3.

    euler:         grad g(u_next) = grad g(u) - tau grad H(u)
    semi_implicit: grad g(u_next) + tau grad H+(u_next) = grad g(u) + tau grad H-(u)
    grad_H is the gradient of the energy in u; semi_implicit reads the
    splitting instead.
    """
    u = _positive(u)
    grad_g = mu * u + (nu / 3.0) * u**3
    if mode == "euler":
        x = cubic_solve_odd(nu / 3.0, mu, grad_g - tau * grad_H(u))
    elif mode == "semi_implicit":
        if split is None:
            raise ValueError("semi_implicit mode needs a splitting")

        def grad(z):
            return mu * z + (nu / 3.0) * z**3 + tau * split.grad_Hplus(z)

        def energy(z):
            return 0.5 * mu * float(z @ z) + nu / 12.0 * float(np.sum(z**4)) + tau * split.eval_Hplus(z)

        hess = None
        if split.hess_Hplus is not None:
            hess = lambda z: np.diag(mu + nu * z * z) + tau * np.atleast_2d(split.hess_Hplus(z))
        x, _ = solve_gradient_equation(
            grad, grad_g + tau * split.grad_Hminus(u), u, f=energy, hess=hess
        )
    else:
        raise ValueError(f"Unknown mirror mode: {mode}")
    x = np.atleast_1d(x)
    if not np.all(x > 0):
        idx = int(np.flatnonzero(~(x > 0))[0])
        raise PositivityLost(f"Mirror step lost positivity at index {idx}", index=idx)
    return x


# LV with mutation on [0, 1]


@dataclass(frozen=True)
class IntervalGrid:
    """
    Cell-centred grid of n cells on [0, 1].
    """

    n: int

    def __post_init__(self):
        if self.n < 3:
            raise InvalidSystem(f"Interval grid needs at least 3 cells, got {self.n}")

    @property
    def h(self):
        return 1.0 / self.n

    @property
    def x(self):
        return (np.arange(self.n) + 0.5) * self.h


def _grid_field(grid, a):
    values = a(grid.x) if callable(a) else a
    return np.asarray(values, dtype=float) * np.ones(grid.n)


def _grid_kernel(grid, b):
    if callable(b):
        X, Y = np.meshgrid(grid.x, grid.x, indexing="ij")
        return np.asarray(b(X, Y), dtype=float) * np.ones((grid.n, grid.n))
    return np.asarray(b, dtype=float) * np.ones((grid.n, grid.n))


def mutation_reaction(grid, a, b, u):
    """
    u (a - int b(x, y) u(y)^2 dy) / 2 on the grid.
    """
    a_vals = _grid_field(grid, a)
    b_vals = _grid_kernel(grid, b)
    return 0.5 * u * (a_vals - grid.h * b_vals @ (u * u))


def mutation_energy(grid, a, b, u, diffusion=1.0):
    """
    H(u) = (1/8) iint b u^2 u^2 - (1/4) int a u^2 + (diffusion/2) int |u_x|^2
    """
    u = np.asarray(u, dtype=float)
    a_vals = _grid_field(grid, a)
    b_vals = _grid_kernel(grid, b)
    s = u * u
    h = grid.h
    grad_sq = float(np.sum(np.diff(u) ** 2)) / h
    return float(0.125 * h * h * s @ b_vals @ s - 0.25 * h * a_vals @ s + 0.5 * diffusion * grad_sq)


def mutation_dt_threshold(grid, a, b, u):
    """
    2 / |J|_2 for the Jacobian J of the explicit reaction term at u.
    """
    u = np.asarray(u, dtype=float)
    a_vals = _grid_field(grid, a)
    b_vals = _grid_kernel(grid, b)
    jac = np.diag(0.5 * (a_vals - grid.h * b_vals @ (u * u))) - grid.h * np.outer(u, u) * b_vals
    norm = float(np.linalg.norm(jac, 2))
    return np.inf if norm == 0.0 else 2.0 / norm


def lv_mutation_step(grid, a, b, dt, u, diffusion=1.0):
    """
    Backward Euler for diffusion (Neumann stencil, tridiagonal solve) with the
    reaction u (a - int b u^2)/2 taken explicitly.
    """
    u = _positive(u)
    rhs = u + dt * mutation_reaction(grid, a, b, u)
    if diffusion == 0.0:
        u_next = rhs
    else:
        r = diffusion * dt / grid.h**2
        n = grid.n
        ab = np.zeros((3, n))
        ab[0, 1:] = -r
        ab[2, :-1] = -r
        ab[1, :] = 1.0 + 2.0 * r
        ab[1, 0] = ab[1, -1] = 1.0 + r
        u_next = linalg.solve_banded((1, 1), ab, rhs)
    if not np.all(u_next > 0):
        idx = int(np.flatnonzero(~(u_next > 0))[0])
        raise PositivityLost(f"Mutation step lost positivity at cell {idx}", index=idx)
    return u_next


def run_mutation(grid, a, b, dt, u0, n_steps, diffusion=1.0):
    """
    Iterate lv_mutation_step; h_energies holds the mutation energy.
    """
    u = _positive(u0, "initial state").copy()
    trace = LVTrace(variable="u", scheme="lv_mutation")
    threshold = mutation_dt_threshold(grid, a, b, u)
    if dt >= threshold:
        logger.warning("dt=%g is above the reaction threshold %.4g", dt, threshold)
    for k in range(n_steps + 1):
        if k:
            u = lv_mutation_step(grid, a, b, dt, u, diffusion)
        trace.states.append(u.copy())
        trace.times.append(k * dt)
        trace.h_energies.append(mutation_energy(grid, a, b, u, diffusion))
        trace.min_components.append(float(u.min()))
    return trace


# System registry


def logistic():
    return LVSystem(a=[1.0], B=[[1.0]], d=[1.0], name="logistic")


def competitive2():
    return LVSystem(a=[1.0, 1.0], B=[[2.0, 1.0], [1.0, 2.0]], d=[1.0, 1.0], name="competitive2")


def extinction2():
    return LVSystem(a=[1.0, 0.2], B=[[1.0, 0.5], [0.5, 1.0]], d=[1.0, 1.0], name="extinction2")


def random_competitive(n=5, seed=0):
    """
    Random competitive system: a, d uniform on [0.5, 1.5], B the symmetric
    part of a uniform [0.1, 1] matrix plus the identity.
    """
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.5, 1.5, n)
    m = rng.uniform(0.1, 1.0, (n, n))
    B = 0.5 * (m + m.T) + np.eye(n)
    d = rng.uniform(0.5, 1.5, n)
    return LVSystem(a=a, B=B, d=d, name=f"random_competitive(n={n}, seed={seed})")


SYSTEMS = {
    "logistic": logistic,
    "competitive2": competitive2,
    "extinction2": extinction2,
    "random_competitive": random_competitive,
}


def get_system(name, **params):
    if name not in SYSTEMS:
        raise KeyError(f"Unknown system: {name}")
    return SYSTEMS[name](**params)


def default_start(sys):
    """
    Interior starting point used when a scenario gives none.
    """
    return np.full(sys.n, 0.5) if sys.n > 1 else np.array([0.1])
