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
Difference-of-convex optimizers.

Every scheme here is an instance of the same update: given a splitting
H = H+ - H- into convex parts, solve grad H+(u_next) = (explicit right side).
DCA, the semi-implicit Euler step, DCA with momentum and the dual DCA only
differ in that right side.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .constants import (
    DESCENT_SLACK,
    DIVERGENCE_NORM,
    ENERGY_EQUALITY_TOL,
    MONOTONE_SLACK,
    SUPPORTED_SCHEMES,
)
from .errors import (
    Diverged,
    InvalidSplitting,
    MissingInverse,
    NonConvergedImplicitSolve,
    NonFinite,
    StepTooLarge,
)
from .models import IterateTrace, MonitorReport, SolverConfig

logger = logging.getLogger(__name__)

_MAX_BACKTRACK = 60
_ARMIJO = 1e-4


@dataclass(frozen=True)
class Energy:
    """
    A smooth energy with its gradient; hess and lip are optional.
    """

    dim: int
    H: Callable
    grad: Callable
    hess: Optional[Callable] = None
    lip: Optional[float] = None
    name: str = ""


@dataclass(frozen=True)
class SplitEnergy:
    """
    An energy H with a convex splitting H = H+ - H-.

    kappa is the strong convexity modulus of H+, mu the convexity modulus of
    H- and lip_L the Lipschitz constant of grad H+. The constants are declared
    by the caller; validate_split_energy spot-checks them.
    """

    dim: int
    eval_Hplus: Callable
    eval_Hminus: Callable
    grad_Hplus: Callable
    grad_Hminus: Callable
    kappa: float
    mu: float
    lip_L: float
    eval_H: Optional[Callable] = None
    inv_grad_Hplus: Optional[Callable] = None
    inv_grad_Hminus: Optional[Callable] = None
    hess_Hplus: Optional[Callable] = None
    hess_Hminus: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidSplitting(f"dim must be positive, got {self.dim}")
        if not self.lip_L > 0:
            raise InvalidSplitting(f"lip_L must be positive, got {self.lip_L}")
        if not self.kappa + self.mu > 0:
            raise InvalidSplitting(
                f"kappa + mu must be positive for a monotone DCA, got {self.kappa} + {self.mu}"
            )
        if self.eval_H is None:
            hp, hm = self.eval_Hplus, self.eval_Hminus
            object.__setattr__(self, "eval_H", lambda u: hp(u) - hm(u))

    def H(self, u):
        return float(self.eval_H(u))

    def grad(self, u):
        return self.grad_Hplus(u) - self.grad_Hminus(u)


@dataclass(frozen=True)
class MomentumSpec:
    """
    Momentum potential b through its gradient; beta bounds its smoothness.
    """

    grad_b: Callable
    beta: float

    def __post_init__(self):
        if self.beta < 0:
            raise InvalidSplitting(f"beta must be nonnegative, got {self.beta}")


def _check_finite(*arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NonFinite("Non-finite value in state")


def _as_state(u):
    return np.atleast_1d(np.asarray(u, dtype=float))


def _fd_jacobian(grad, x, scale=1e-7):
    n = x.size
    jac = np.empty((n, n))
    for j in range(n):
        h = scale * max(1.0, abs(x[j]))
        e = np.zeros(n)
        e[j] = h
        jac[:, j] = (grad(x + e) - grad(x - e)) / (2 * h)
    return 0.5 * (jac + jac.T)


def solve_gradient_equation(grad, rhs, x0, f=None, hess=None, tol=1e-12, max_iter=100):
    """
    Solve grad(x) = rhs for the gradient of a strongly convex f.

    Damped Newton on phi(x) = f(x) - <rhs, x> with Armijo backtracking; the
    Jacobian is the supplied hessian or a central finite-difference one.
    Without f the line search falls back to residual decrease.
    """
    rhs = _as_state(rhs)
    x = _as_state(x0).copy()
    scale = max(1.0, float(np.linalg.norm(rhs)))

    def phi(z):
        return f(z) - float(rhs @ z)

    residual = grad(x) - rhs
    for it in range(max_iter):
        res_norm = float(np.linalg.norm(residual))
        if res_norm <= tol * scale:
            return x, it
        jac = np.atleast_2d(hess(x)) if hess is not None else _fd_jacobian(grad, x)
        try:
            dx = -np.linalg.solve(jac, residual)
        except np.linalg.LinAlgError:
            dx = -residual
        slope = float(residual @ dx)
        if not np.all(np.isfinite(dx)) or slope >= 0:
            dx = -residual
            slope = -res_norm**2
        phi0 = phi(x) if f is not None else None
        t = 1.0
        for _ in range(_MAX_BACKTRACK):
            x_new = x + t * dx
            res_new = grad(x_new) - rhs
            new_norm = float(np.linalg.norm(res_new))
            if np.all(np.isfinite(res_new)):
                if new_norm < res_norm:
                    break
                if phi0 is not None and phi(x_new) <= phi0 + _ARMIJO * t * slope:
                    break
            t *= 0.5
        x, residual = x_new, res_new
    if float(np.linalg.norm(residual)) <= tol * scale:
        return x, max_iter
    raise NonConvergedImplicitSolve(
        f"Newton did not reach {tol:g} in {max_iter} iterations "
        f"(residual {float(np.linalg.norm(residual)):.3e})"
    )


def _solve_plus(split, rhs, x0, cfg):
    if split.inv_grad_Hplus is not None:
        return _as_state(split.inv_grad_Hplus(rhs))
    if not split.kappa > 0:
        raise MissingInverse("grad H+ is not invertible: kappa <= 0 and no inverse supplied")
    x, _ = solve_gradient_equation(
        split.grad_Hplus,
        rhs,
        x0,
        f=split.eval_Hplus,
        hess=split.hess_Hplus,
        tol=cfg.newton_tol,
        max_iter=cfg.newton_max,
    )
    return x


def dca_step(split, u, cfg=None):
    """
    One DCA step: grad H+(u_next) = grad H-(u).
    """
    cfg = cfg or SolverConfig()
    u = _as_state(u)
    _check_finite(u)
    u_next = _solve_plus(split, split.grad_Hminus(u), u, cfg)
    _check_finite(u_next)
    return u_next


def augmented_splitting(split, tau):
    """
    The pair (H+ + |.|^2/2tau, H- + |.|^2/2tau) whose DCA step is the
    semi-implicit Euler step with time step tau.
    """
    if not tau > 0:
        raise InvalidSplitting(f"tau must be positive, got {tau}")
    s = 1.0 / tau
    hess_plus = None
    if split.hess_Hplus is not None:
        hess_plus = lambda u: np.atleast_2d(split.hess_Hplus(u)) + s * np.eye(split.dim)
    hess_minus = None
    if split.hess_Hminus is not None:
        hess_minus = lambda u: np.atleast_2d(split.hess_Hminus(u)) + s * np.eye(split.dim)
    return SplitEnergy(
        dim=split.dim,
        eval_Hplus=lambda u: split.eval_Hplus(u) + 0.5 * s * float(u @ u),
        eval_Hminus=lambda u: split.eval_Hminus(u) + 0.5 * s * float(u @ u),
        grad_Hplus=lambda u: split.grad_Hplus(u) + s * u,
        grad_Hminus=lambda u: split.grad_Hminus(u) + s * u,
        kappa=split.kappa + s,
        mu=split.mu + s,
        lip_L=split.lip_L + s,
        eval_H=split.eval_H,
        hess_Hplus=hess_plus,
        hess_Hminus=hess_minus,
        name=f"{split.name}+prox({tau:g})",
    )


def semi_implicit_step(split, tau, u, cfg=None):
    """
    u_next + tau grad H+(u_next) = u + tau grad H-(u).
    """
    return dca_step(augmented_splitting(split, tau), u, cfg)


def momentum_step(split, mom, u_cur, u_prev, cfg=None):
    """
    grad H+(u_next) = grad H-(u_cur) + grad b(u_cur) - grad b(u_prev).
    """
    cfg = cfg or SolverConfig()
    if not mom.beta < (split.kappa + split.mu) / 2:
        raise InvalidSplitting(
            f"beta={mom.beta:g} outside the convergence regime (kappa+mu)/2="
            f"{(split.kappa + split.mu) / 2:g}"
        )
    u_cur, u_prev = _as_state(u_cur), _as_state(u_prev)
    _check_finite(u_cur, u_prev)
    rhs = split.grad_Hminus(u_cur) + mom.grad_b(u_cur) - mom.grad_b(u_prev)
    u_next = _solve_plus(split, rhs, u_cur, cfg)
    _check_finite(u_next)
    return u_next


def doubled_energy(split, u_next, u_cur):
    """
    M(u_next, u_cur) = H(u_next) + ((kappa+mu)/4)|u_next - u_cur|^2.
    """
    diff = _as_state(u_next) - _as_state(u_cur)
    return split.H(u_next) + 0.25 * (split.kappa + split.mu) * float(diff @ diff)


def _conjugate_grad(split, p, cfg):
    if split.inv_grad_Hplus is not None:
        return _as_state(split.inv_grad_Hplus(p))
    return _solve_plus(split, p, p, cfg)


def dual_dca_step(split, p, cfg=None):
    """
    p_next = grad H-(grad H+*(p)).
    """
    cfg = cfg or SolverConfig()
    if not split.mu > 0:
        raise MissingInverse("H- is not strongly convex, the dual DCA is undefined")
    p = _as_state(p)
    _check_finite(p)
    p_next = _as_state(split.grad_Hminus(_conjugate_grad(split, p, cfg)))
    _check_finite(p_next)
    return p_next


def dual_momentum_step(split, mom, p_cur, p_prev, cfg=None):
    """
    Momentum on the dual side:
    p_next = grad H-(grad H+*(p_cur) + grad b(p_cur) - grad b(p_prev)).
    """
    cfg = cfg or SolverConfig()
    p_cur, p_prev = _as_state(p_cur), _as_state(p_prev)
    _check_finite(p_cur, p_prev)
    y = _conjugate_grad(split, p_cur, cfg) + mom.grad_b(p_cur) - mom.grad_b(p_prev)
    p_next = _as_state(split.grad_Hminus(y))
    _check_finite(p_next)
    return p_next


def euler_splitting(energy, tau):
    """
    H+ = |u|^2/2tau, H- = |u|^2/2tau - H; its DCA step is explicit Euler.
    """
    if not tau > 0:
        raise InvalidSplitting(f"tau must be positive, got {tau}")
    lip_h = energy.lip if energy.lip is not None else 0.0
    s = 1.0 / tau
    return SplitEnergy(
        dim=energy.dim,
        eval_Hplus=lambda u: 0.5 * s * float(u @ u),
        eval_Hminus=lambda u: 0.5 * s * float(u @ u) - energy.H(u),
        grad_Hplus=lambda u: s * u,
        grad_Hminus=lambda u: s * u - energy.grad(u),
        kappa=s,
        mu=s - lip_h,
        lip_L=s,
        eval_H=energy.H,
        inv_grad_Hplus=lambda p: tau * np.asarray(p, dtype=float),
        hess_Hplus=lambda u: s * np.eye(energy.dim),
        name=f"{energy.name}:euler({tau:g})",
    )


def momentum_tau(energy):
    """
    Default step for the heavy-ball and Nesterov splittings: 1/L, which keeps
    |u|^2/2 - tau H convex.
    """
    return 1.0 / energy.lip if energy.lip else 1.0


def polyak_momentum(energy, tau, beta):
    """
    Heavy ball as DCA with momentum on tau*H:
    H+ = |u|^2/2, H- = |u|^2/2 - tau H, b = beta |u|^2/2, so that
    u_next = u - tau grad H(u) + beta (u - u_prev).
    """
    lip_h = energy.lip if energy.lip is not None else 0.0
    split = SplitEnergy(
        dim=energy.dim,
        eval_Hplus=lambda u: 0.5 * float(u @ u),
        eval_Hminus=lambda u: 0.5 * float(u @ u) - tau * energy.H(u),
        grad_Hplus=lambda u: np.array(u, dtype=float),
        grad_Hminus=lambda u: u - tau * energy.grad(u),
        kappa=1.0,
        mu=1.0 - tau * lip_h,
        lip_L=1.0,
        eval_H=lambda u: tau * energy.H(u),
        inv_grad_Hplus=lambda p: np.array(p, dtype=float),
        inv_grad_Hminus=None,
        name=f"{energy.name}:polyak",
    )
    mom = MomentumSpec(grad_b=lambda u: beta * np.asarray(u, dtype=float), beta=beta)
    return split, mom


def nesterov_step(energy, tau, beta, u_cur, u_prev):
    """
    Nesterov's method as the dual momentum step of the Euler splitting:
    y = u + beta (u - u_prev), u_next = y - tau grad H(y).
    """
    split, mom = polyak_momentum(energy, tau, beta)
    return dual_momentum_step(split, mom, u_cur, u_prev)


def ipiano_parameters(alpha, beta, lip_h):
    """
    iPiano read as DCA with momentum: H+ = |u|^2/(2 alpha) and
    b = beta |u|^2/(2 alpha). Returns the constants of the implied splitting
    and whether beta sits in the monotone regime.
    """
    kappa = 1.0 / alpha
    mu = 1.0 / alpha - lip_h
    beta_b = beta / alpha
    return {
        "kappa": kappa,
        "mu": mu,
        "beta": beta_b,
        "monotone": bool(beta_b < (kappa + mu) / 2),
    }


def optimal_splitting_shift(lip_L, kappa, mu):
    """
    Shift t = L - kappa - mu: adding t|u|^2/2 to both parts moves the
    constants to (kappa+t, mu+t, L+t). Returned as a plain helper.
    """
    t = lip_L - kappa - mu
    return {"t": t, "kappa": kappa + t, "mu": mu + t, "lip_L": lip_L + t}


def energy_rate_factor(sigma, gamma, c):
    """
    Per-step contraction of H_n - h for theta = 1/2: 1 - sigma*gamma*c^2.
    """
    return 1.0 - sigma * gamma * c * c


def run(scheme, split, u0, cfg=None, mom=None, strict=False):
    """
    Iterate one of the supported schemes from u0 until a stop criterion.

    Diverging runs stop with stop_reason "diverged" and a logged warning;
    with strict=True they raise Diverged instead.
    """
    if scheme not in SUPPORTED_SCHEMES:
        raise ValueError(f"Unsupported scheme: {scheme}")
    if scheme in ("momentum", "nesterov") and mom is None:
        raise ValueError(f"Scheme {scheme} needs a MomentumSpec")
    cfg = cfg or SolverConfig()
    u = _as_state(u0)
    _check_finite(u)
    trace = IterateTrace(scheme=scheme)

    dual = scheme in ("dual", "nesterov")
    p = _as_state(split.grad_Hplus(u)) if dual else None
    p_prev = p
    u_prev = u
    g = float(np.linalg.norm(split.grad(u)))
    trace.record(u, split.H(u), g)
    if dual:
        trace.dual_states.append(p.copy())

    logger.info("Running %s on %s from |u0|=%.3e", scheme, split.name or "energy", np.linalg.norm(u))
    reason = None
    for it in range(cfg.max_iters):
        if g < cfg.grad_tol:
            reason = "gradient_tol"
            break
        if scheme == "dca":
            u_next = dca_step(split, u, cfg)
        elif scheme == "semi_implicit":
            u_next = semi_implicit_step(split, cfg.tau, u, cfg)
        elif scheme == "momentum":
            u_next = momentum_step(split, mom, u, u_prev, cfg)
        else:
            if scheme == "dual":
                p_next = dual_dca_step(split, p, cfg)
            else:
                p_next = dual_momentum_step(split, mom, p, p_prev, cfg)
            p_prev, p = p, p_next
            u_next = _conjugate_grad(split, p, cfg)
        if float(np.linalg.norm(u_next)) > DIVERGENCE_NORM:
            if strict:
                raise Diverged(f"|u| exceeded {DIVERGENCE_NORM:g} at iteration {it + 1}")
            logger.warning("%s diverged at iteration %d", scheme, it + 1)
            reason = "diverged"
            break
        if scheme == "momentum":
            trace.doubled.append(doubled_energy(split, u_next, u))
        u_prev, u = u, u_next
        g = float(np.linalg.norm(split.grad(u)))
        trace.record(u, split.H(u), g)
        if dual:
            trace.dual_states.append(p.copy())
        logger.debug("%s it=%d H=%.17g |grad|=%.3e", scheme, it + 1, trace.energies[-1], g)
        if trace.step_norms[-1] < cfg.step_tol:
            reason = "step_tol"
            break
    if reason is None:
        reason = "gradient_tol" if g < cfg.grad_tol else "max_iters"
    trace.finish(reason)
    logger.info("%s stopped after %d steps: %s", scheme, len(trace.step_norms), reason)
    return trace


def check_strong_descent(trace, sigma, slack=DESCENT_SLACK, eq_tol=ENERGY_EQUALITY_TOL):
    """
    Check the primary descent condition
        H(u_k) - H(u_k+1) >= sigma |grad H(u_k)| |u_k+1 - u_k|
    and the complementary condition (equal energies imply equal points) on
    every step of a trace.

    Energies count as equal when they agree to eq_tol relative to max(1, |H|);
    points count as different when the step exceeds sqrt(eq_tol) relative to
    max(1, |u|).
    """
    energies = trace.energy_array()
    grads = trace.grad_array()
    steps = trace.step_array()
    primary, complementary, margins, ratios = [], [], [], []
    for k in range(len(steps)):
        drop = energies[k] - energies[k + 1]
        bound = sigma * grads[k] * steps[k]
        margin = drop - bound
        margins.append(margin)
        primary.append(bool(margin >= -slack))
        equal_energy = abs(drop) <= eq_tol * max(1.0, abs(energies[k]))
        scale = max(1.0, float(np.linalg.norm(trace.states[k])))
        moved = steps[k] > math.sqrt(eq_tol) * scale
        complementary.append(not (equal_energy and moved))
        if grads[k] * steps[k] > 0:
            ratios.append(drop / (grads[k] * steps[k]))
    return MonitorReport(
        checks={
            "primary": all(primary),
            "complementary": all(complementary),
        },
        details={
            "sigma": sigma,
            "primary_steps": primary,
            "complementary_steps": complementary,
            "worst_margin": min(margins) if margins else 0.0,
            "best_sigma": min(ratios) if ratios else None,
        },
    )


def check_rate_condition(trace, lip_L, slack=MONOTONE_SLACK):
    """
    |u_k+1 - u_k| >= |grad H(u_k)| / L for every step.
    """
    grads = trace.grad_array()
    steps = trace.step_array()
    margins = steps - grads[: len(steps)] / lip_L
    worst = float(margins.min()) if margins.size else 0.0
    return MonitorReport(
        checks={"rate_condition": bool(worst >= -slack)},
        details={"worst_margin": worst},
    )


def check_energy_monotone(trace, split, slack=MONOTONE_SLACK):
    """
    H(u_k+1) - H(u_k) <= -((kappa+mu)/2) |u_k+1 - u_k|^2 + slack.
    """
    energies = trace.energy_array()
    steps = trace.step_array()
    bound = -0.5 * (split.kappa + split.mu) * steps**2
    excess = np.diff(energies) - bound
    worst = float(excess.max()) if excess.size else 0.0
    return MonitorReport(
        checks={"energy_monotone": bool(worst <= slack)},
        details={"worst_excess": worst},
    )


def check_doubled_monotone(trace, slack=MONOTONE_SLACK):
    doubled = np.asarray(trace.doubled, dtype=float)
    increases = np.diff(doubled)
    worst = float(increases.max()) if increases.size else 0.0
    return MonitorReport(
        checks={"doubled_monotone": bool(worst <= slack)},
        details={"worst_increase": worst},
    )


def validate_split_energy(split, rng=None, n_samples=20, radius=1.0, center=None, fd_step=1e-6):
    """
    Spot-check the declared structure of a splitting at random points: the
    identity H = H+ - H-, the gradient against central differences and
    midpoint convexity of H+ - kappa|u|^2/2 and H- - mu|u|^2/2.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    center = np.zeros(split.dim) if center is None else _as_state(center)
    worst_identity = 0.0
    worst_gradient = 0.0
    convex_plus = True
    convex_minus = True
    for _ in range(n_samples):
        u = center + radius * rng.uniform(-1.0, 1.0, split.dim)
        h = split.H(u)
        diff = abs(h - (split.eval_Hplus(u) - split.eval_Hminus(u)))
        worst_identity = max(worst_identity, diff / max(1.0, abs(h)))

        g = split.grad(u)
        g_fd = np.empty(split.dim)
        for j in range(split.dim):
            step = fd_step * max(1.0, abs(u[j]))
            e = np.zeros(split.dim)
            e[j] = step
            g_fd[j] = (split.H(u + e) - split.H(u - e)) / (2 * step)
        worst_gradient = max(
            worst_gradient, float(np.linalg.norm(g - g_fd)) / max(1.0, float(np.linalg.norm(g)))
        )

        v = center + radius * rng.uniform(-1.0, 1.0, split.dim)
        mid = 0.5 * (u + v)
        for fn, modulus, label in (
            (split.eval_Hplus, split.kappa, "plus"),
            (split.eval_Hminus, split.mu, "minus"),
        ):
            def shifted(z):
                return fn(z) - 0.5 * modulus * float(z @ z)

            lhs = shifted(mid)
            rhs = 0.5 * (shifted(u) + shifted(v))
            tol = 1e-10 * max(1.0, abs(lhs), abs(rhs))
            if lhs > rhs + tol:
                if label == "plus":
                    convex_plus = False
                else:
                    convex_minus = False
    return MonitorReport(
        checks={
            "identity": worst_identity < 1e-10,
            "gradient": worst_gradient < 1e-6,
            "convex_plus": convex_plus,
            "convex_minus": convex_minus,
        },
        details={"identity_error": worst_identity, "gradient_error": worst_gradient},
    )


# C-infinity energy whose gradient flow does not converge


def _hat(r):
    return math.exp(-1.0 / (r * r - 1.0))


def spiral_energy_polar(r, theta):
    """
    E = exp(-1/(r^2-1)) (1 + sin(1/(r-1) - theta)/2) for r > 1,
    exp(1/(r^2-1)) for r < 1 and 0 on the unit circle.

    The lifted sine keeps E > 0 outside the circle. With the bare sine a
    descending path drops into a trough where E < 0 and can no longer reach
    the circle, where E = 0.
    """
    if r > 1.0:
        return _hat(r) * (1.0 + 0.5 * math.sin(1.0 / (r - 1.0) - theta))
    if r < 1.0:
        return math.exp(1.0 / (r * r - 1.0))
    return 0.0


def spiral_partials(r, theta):
    """
    (dE/dr, dE/dtheta) of the spiral energy.
    """
    if r > 1.0:
        g = _hat(r)
        s = 1.0 / (r - 1.0) - theta
        dg = g * 2.0 * r / (r * r - 1.0) ** 2
        de_dr = dg * (1.0 + 0.5 * math.sin(s)) - g * 0.5 * math.cos(s) / (r - 1.0) ** 2
        de_dtheta = -g * 0.5 * math.cos(s)
        return de_dr, de_dtheta
    if r < 1.0:
        e = math.exp(1.0 / (r * r - 1.0))
        return -e * 2.0 * r / (r * r - 1.0) ** 2, 0.0
    return 0.0, 0.0


def spiral_energy(u):
    x, y = float(u[0]), float(u[1])
    return spiral_energy_polar(math.hypot(x, y), math.atan2(y, x))


def spiral_gradient(u):
    x, y = float(u[0]), float(u[1])
    r = math.hypot(x, y)
    if r == 0.0:
        return np.zeros(2)
    de_dr, de_dtheta = spiral_partials(r, math.atan2(y, x))
    return np.array(
        [
            de_dr * x / r - de_dtheta * y / (r * r),
            de_dr * y / r + de_dtheta * x / (r * r),
        ]
    )


@dataclass
class PolarTrajectory:
    times: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    energies: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def angular_travel(self):
        return float(self.theta[-1] - self.theta[0])


def _polar_rhs(state):
    r, theta = state
    de_dr, de_dtheta = spiral_partials(r, theta)
    return np.array([-de_dr, -de_dtheta / (r * r)])


def check_nonconvergence_example(t_max, dt, r0=1.5, theta0=0.0):
    """
    Integrate the gradient flow of the spiral energy in polar coordinates with
    RK4. The trajectory winds towards the unit circle, on which every point is
    critical, while theta keeps growing.

    Along the spiral theta grows like 1/(r-1) while r-1 decays like
    1/(2 log t), so r-1 = 1e-3 is out of reach (t near e^500) but two
    turns fit in t = 1e5.
    """
    if not r0 > 1.0:
        raise ValueError(f"r0 must start outside the unit circle, got {r0}")
    n_steps = int(round(t_max / dt))
    out = np.empty((n_steps + 1, 2))
    out[0] = (r0, theta0)
    state = out[0].copy()
    for k in range(n_steps):
        k1 = _polar_rhs(state)
        k2 = _polar_rhs(state + 0.5 * dt * k1)
        k3 = _polar_rhs(state + 0.5 * dt * k2)
        k4 = _polar_rhs(state + dt * k3)
        nxt = state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not nxt[0] > 1.0:
            raise StepTooLarge(f"dt={dt:g} crosses the unit circle at step {k + 1}")
        _check_finite(nxt)
        state = nxt
        out[k + 1] = state
    times = dt * np.arange(n_steps + 1)
    energies = np.array([spiral_energy_polar(r, th) for r, th in out])
    return PolarTrajectory(times=times, r=out[:, 0], theta=out[:, 1], energies=energies)


def flat_ratio_profile(theta, ks=range(1, 7)):
    """
    log(|f(y)|^theta / f'(y)) for f(y) = exp(-1/y) at y = 10^-k.

    The ratio equals y^2 exp((1-theta)/y), so its log is
    (1-theta)/y + 2 log y; the log form avoids overflow.
    """
    ys = np.array([10.0 ** (-k) for k in ks])
    return (1.0 - theta) / ys + 2.0 * np.log(ys)
