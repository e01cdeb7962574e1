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
Empirical Lojasiewicz diagnostics for traces.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from .constants import (
    CLASSIFICATION_TOL,
    EXCLUSION_FACTOR,
    H_LIMIT_MODES,
    MIN_SAMPLES,
    TAIL_FRACTION,
)
from .errors import InsufficientData, NonMonotoneTail
from .models import DecayFit, MonitorReport, RateFit

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


class LojaStatsCalculator:
    """
    Calculates Lojasiewicz statistics for energy/gradient sequences.
    """

    @staticmethod
    def aitken_limit(energies):
        """
        Aitken delta-squared extrapolation of the last three values.
        """
        h0, h1, h2 = energies[-3:]
        denom = h2 - 2.0 * h1 + h0
        if denom == 0.0:
            return float(h2)
        return float(h2 - (h2 - h1) ** 2 / denom)

    @staticmethod
    def usable_tail(energies, grads, h_limit, tail_fraction):
        """
        Indices of the analyzed tail: samples too close to the limit are dropped
        first (log blow-up), then the last tail_fraction of the remainder kept.
        """
        gap = np.abs(energies - h_limit)
        floor = EXCLUSION_FACTOR * _EPS * max(abs(energies[0]), _EPS)
        keep = np.flatnonzero((gap > floor) & (grads > 0))
        if keep.size == 0:
            return keep
        start = int(np.floor((1.0 - tail_fraction) * keep.size))
        return keep[start:]

    @staticmethod
    def regression(energies, grads, h_limit, idx):
        x = np.log(np.abs(energies[idx] - h_limit))
        y = np.log(grads[idx])
        return stats.linregress(x, y)

    @staticmethod
    def fit_limit(energies, grads, tail_fraction):
        """
        The limit energy that makes log|grad| most linear in log|H - h|.

        Searched on the far side of the last sample, within the spread of the
        tail itself.
        """
        last = float(energies[-1])
        decreasing = energies[0] >= last
        n0 = int(np.floor((1.0 - tail_fraction) * len(energies)))
        spread = abs(float(energies[n0]) - last)
        if spread == 0.0:
            raise InsufficientData("Energies have no spread on the tail")

        def sse(h):
            idx = np.flatnonzero(np.abs(energies - h) > 0)
            idx = idx[idx >= n0]
            if idx.size < 3:
                return np.inf
            fit = LojaStatsCalculator.regression(energies, grads, h, idx)
            x = np.log(np.abs(energies[idx] - h))
            y = np.log(grads[idx])
            return float(np.sum((y - fit.intercept - fit.slope * x) ** 2))

        tiny = 1e-12 * spread
        if decreasing:
            bounds = (last - spread, last - tiny)
        else:
            bounds = (last + tiny, last + spread)
        res = optimize.minimize_scalar(
            sse, bounds=bounds, method="bounded", options={"xatol": 1e-13 * max(spread, abs(last))}
        )
        return float(res.x)

    @staticmethod
    def empirical_constants(energies, grads, steps, theta, h_limit):
        """
        Trajectory-wide constants for the l1 tail bound:
        c = min |grad H_n| / (H_n - h)^(1 - theta) and
        sigma = min (H_n - H_n+1) / (|grad H_n| |du_n|).
        Either is None when no step defines it.
        """
        energies = np.asarray(energies, dtype=float)
        grads = np.asarray(grads, dtype=float)
        steps = np.asarray(steps, dtype=float)
        gap = energies - h_limit
        ok = gap > 0
        c = None
        if ok.any():
            c = float(np.min(grads[ok] / gap[ok] ** (1.0 - theta)))
        n = len(steps)
        den = grads[:n] * steps
        drops = energies[:n] - energies[1 : n + 1]
        ok = den > 0
        sigma = float(np.min(drops[ok] / den[ok])) if ok.any() else None
        return c, sigma


def _check_tail_monotone(energies, idx):
    diffs = np.diff(energies[idx])
    slack = 1e-12 * max(1.0, float(np.max(np.abs(energies[idx]))))
    if np.all(diffs <= slack) or np.all(diffs >= -slack):
        return
    raise NonMonotoneTail("Energies are not monotone on the analyzed tail")


def estimate_exponent(energies, grad_norms, tail_fraction=TAIL_FRACTION, h_limit="last"):
    """
    Fit log|grad H| = (1 - theta) log|H_n - h| + log c on the tail.

    h_limit is "last" (final energy), "aitken" (delta-squared extrapolation),
    "fit" (limit maximizing linearity, for slow algebraic tails) or a number.
    """
    energies = np.asarray(energies, dtype=float)
    grads = np.asarray(grad_norms, dtype=float)
    if energies.shape != grads.shape:
        raise ValueError("energies and grad_norms must have the same length")
    if energies.size < MIN_SAMPLES:
        raise InsufficientData(f"Need at least {MIN_SAMPLES} samples, got {energies.size}")
    if np.ptp(energies) == 0.0:
        raise InsufficientData("Energy sequence is constant")
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError(f"tail_fraction must lie in (0, 1], got {tail_fraction}")

    if isinstance(h_limit, str):
        if h_limit not in H_LIMIT_MODES:
            raise ValueError(f"Unknown h_limit mode: {h_limit}")
        if h_limit == "last":
            h = float(energies[-1])
        elif h_limit == "aitken":
            h = LojaStatsCalculator.aitken_limit(energies)
        else:
            h = LojaStatsCalculator.fit_limit(energies, grads, tail_fraction)
    else:
        h = float(h_limit)

    idx = LojaStatsCalculator.usable_tail(energies, grads, h, tail_fraction)
    if idx.size < 3:
        raise InsufficientData(f"Only {idx.size} usable samples on the tail")
    _check_tail_monotone(energies, idx)
    fit = LojaStatsCalculator.regression(energies, grads, h, idx)
    theta_raw = 1.0 - float(fit.slope)
    if not 0.0 < theta_raw < 1.0:
        raise InsufficientData(f"Fitted exponent {theta_raw:.3f} is outside (0, 1)")
    theta = min(theta_raw, 0.5)
    model = "exponential" if abs(theta - 0.5) < CLASSIFICATION_TOL else "algebraic"
    r2 = float(fit.rvalue**2) if np.isfinite(fit.rvalue) else 0.0
    logger.debug("theta=%.4f c=%.4g r2=%.6f on %d samples", theta, np.exp(fit.intercept), r2, idx.size)
    return RateFit(
        theta=theta,
        c=float(np.exp(fit.intercept)),
        model=model,
        fit_r2=min(max(r2, 0.0), 1.0),
        h_limit=h,
        tail_fraction=tail_fraction,
        n_used=int(idx.size),
        theta_raw=theta_raw,
    )


def _decay_errors(states, limit):
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        ref = states[-1] if limit is None else float(limit)
        return np.abs(states - ref)
    ref = states[-1] if limit is None else np.asarray(limit, dtype=float)
    return np.linalg.norm(states - ref, axis=1)


def classify_decay(times, states, limit=None, theta=None, tail_fraction=TAIL_FRACTION, floor=1e-10):
    """
    Decide between |u(t) - u_lim| ~ exp(-delta t) and ~ t^(-p) on the tail.

    states may be scalars or vectors; limit defaults to the final state.
    Errors below floor*max(error) are dropped. With theta < 1/2 the algebraic
    power is compared with theta/(1 - 2 theta) to within 0.1.
    """
    times = np.asarray(times, dtype=float)
    errors = _decay_errors(states, limit)
    if errors.size < MIN_SAMPLES:
        raise InsufficientData(f"Need at least {MIN_SAMPLES} samples, got {errors.size}")
    keep = np.flatnonzero((errors > floor * errors.max()) & (times > 0))
    if keep.size < 3:
        raise InsufficientData("Decay sequence has too few nonzero errors")
    idx = keep[int(np.floor((1.0 - tail_fraction) * keep.size)):]
    if idx.size < 3:
        raise InsufficientData("Tail too short to classify")
    log_e = np.log(errors[idx])
    exp_fit = stats.linregress(times[idx], log_e)
    alg_fit = stats.linregress(np.log(times[idx]), log_e)

    def sse(fit, x):
        return float(np.sum((log_e - fit.intercept - fit.slope * x) ** 2))

    sse_exp = sse(exp_fit, times[idx])
    sse_alg = sse(alg_fit, np.log(times[idx]))
    r2_exp = float(exp_fit.rvalue**2)
    r2_alg = float(alg_fit.rvalue**2)
    predicted = None
    if theta is not None and theta < 0.5:
        predicted = theta / (1.0 - 2.0 * theta)
    if sse_exp <= sse_alg:
        return DecayFit(model="exponential", rate=-float(exp_fit.slope), r2=r2_exp, other_r2=r2_alg)
    power = -float(alg_fit.slope)
    return DecayFit(
        model="algebraic",
        rate=power,
        r2=r2_alg,
        other_r2=r2_exp,
        predicted_power=predicted,
        consistent=None if predicted is None else bool(abs(power - predicted) <= 0.1),
    )


def energy_rate_check(energies, sigma, gamma, c, h_limit=None, slack=1e-9):
    """
    Fit the per-step factor of H_n - h and compare it with 1 - sigma*gamma*c^2.
    """
    energies = np.asarray(energies, dtype=float)
    h = float(energies[-1]) if h_limit is None else float(h_limit)
    gap = np.abs(energies - h)
    keep = np.flatnonzero(gap > EXCLUSION_FACTOR * _EPS * max(abs(energies[0]), _EPS))
    if keep.size < 3:
        raise InsufficientData("Too few samples above the limit")
    fit = stats.linregress(keep.astype(float), np.log(gap[keep]))
    factor = float(np.exp(fit.slope))
    bound = 1.0 - sigma * gamma * c * c
    return MonitorReport(
        checks={"energy_rate": bool(factor <= bound + slack)},
        details={"fitted_factor": factor, "bound": bound},
    )


def l1_tail_bound_check(trace, c, sigma, theta, h_limit=None, rel_tol=1e-10, abs_tol=1e-14):
    """
    Verify sum_{k>=n} |u_k+1 - u_k| <= (H_n - h)^theta / (c sigma theta) at
    every n. An exponent outside (0, 1/2] is reported as invalid.
    """
    steps = np.asarray(trace.step_norms, dtype=float)
    energies = np.asarray(trace.energies, dtype=float)
    valid = bool(0.0 < theta <= 0.5) and c > 0 and sigma > 0
    h = float(energies[-1]) if h_limit is None else float(h_limit)
    # lhs[n] = sum of steps from n to the end; the final state has none left
    lhs = np.concatenate([np.cumsum(steps[::-1])[::-1], [0.0]])
    if valid:
        rhs = np.maximum(energies - h, 0.0) ** theta / (c * sigma * theta)
    else:
        rhs = np.full_like(lhs, np.nan)
    slack = rhs - lhs
    holds = valid and bool(np.all(lhs <= rhs * (1.0 + rel_tol) + abs_tol))
    return MonitorReport(
        checks={"valid_theta": valid, "l1_tail": holds},
        details={
            "min_slack": float(np.min(slack)) if valid else None,
            "lhs": lhs.tolist(),
            "rhs": rhs.tolist(),
        },
    )


@dataclass
class AngleRateProfile:
    """
    sigma_n and gamma_n as masked arrays; entries with a zero denominator
    are masked.
    """

    sigma: np.ma.MaskedArray
    gamma: np.ma.MaskedArray

    @property
    def flagged(self):
        return np.flatnonzero(np.ma.getmaskarray(self.sigma))


def angle_rate_profile(trace):
    """
    sigma_n = (H_n - H_n+1)/(|grad H_n| |du_n|), gamma_n = |du_n|/|grad H_n|.
    """
    energies = np.asarray(trace.energies, dtype=float)
    grads = np.asarray(trace.grad_norms, dtype=float)[: len(trace.step_norms)]
    steps = np.asarray(trace.step_norms, dtype=float)
    drops = energies[:-1] - energies[1:]
    angle_den = grads * steps
    bad_angle = angle_den == 0.0
    bad_rate = grads == 0.0
    sigma = np.zeros_like(steps)
    gamma = np.zeros_like(steps)
    np.divide(drops, angle_den, out=sigma, where=~bad_angle)
    np.divide(steps, grads, out=gamma, where=~bad_rate)
    return AngleRateProfile(
        sigma=np.ma.masked_array(sigma, mask=bad_angle),
        gamma=np.ma.masked_array(gamma, mask=bad_rate),
    )


def rate_report(fit, decay=None, tail=None, descent=None):
    """
    Flat record of a diagnosis for serialization.
    """
    record = fit.as_dict()
    if decay is not None:
        record.update(
            {
                "decay_model": decay.model,
                "decay_rate": decay.rate,
                "decay_r2": decay.r2,
                "predicted_power": decay.predicted_power,
                "power_consistent": decay.consistent,
            }
        )
    if tail is not None:
        record["l1_tail"] = tail.checks.get("l1_tail")
        record["l1_min_slack"] = tail.details.get("min_slack")
    if descent is not None:
        record["best_sigma"] = descent.details.get("best_sigma")
    return record
