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
Scenario execution for gradflow.

Every scenario kind maps to a runner that builds its objects from the
registries, runs the scheme, writes the requested artifacts and returns a
MonitorReport. run_all fans scenarios out to a process pool and gathers the
results in id order.
"""

import inspect
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import conc_disp, energies, kernels, lotka_volterra
from .constants import (
    CONTINUATION_FACTOR,
    CROSS_CHECK_TOL,
    DEFAULT_OUTPUT_DIR,
    LP1_LIMIT_TOL,
    PROFILE_FILE,
    REFINEMENT_TOL,
    REG_RESIDUAL_TOL,
    REPORT_FILE,
    TRACE_FILE,
)
from .dc_optim import (
    MomentumSpec,
    check_doubled_monotone,
    check_energy_monotone,
    check_strong_descent,
    momentum_tau,
    polyak_momentum,
    run,
)
from .errors import GradflowError, InsufficientData, NonMonotoneTail, PetviashviliDiverged
from .file_operations import TraceFileManager
from .loja_diag import LojaStatsCalculator, classify_decay, estimate_exponent, l1_tail_bound_check, rate_report
from .models import IterateTrace, MonitorReport, SolverConfig
from .reg_conc_disp import RegCDConfig, decay_fit, epsilon_continuation, reg_evolve, reg_stability_factor
from .schemas import RunSummary, Scenario, ScenarioResult, parse_registry_name

logger = logging.getLogger(__name__)

CONVERGED_REASONS = ("gradient_tol", "step_tol")
DEFAULT_BETA_FRACTION = 0.4
DEFAULT_POLYAK_BETA = 0.3


def _tail_lengths(step_norms):
    # remaining path length from each state, zero at the final one
    steps = np.asarray(step_norms, dtype=float)
    return np.concatenate([np.cumsum(steps[::-1])[::-1], [0.0]])


def _start(u0, default, dim):
    u = np.asarray(u0 if u0 is not None else default, dtype=float)
    if u.size == 1 and dim > 1:
        u = np.full(dim, float(u[0]))
    return u


def _system(text, seed):
    name, kw = parse_registry_name(text)
    if name == "random_competitive":
        kw.setdefault("seed", seed)
    return lotka_volterra.get_system(name, **kw)


def _kernel(text, grid):
    name, kw = parse_registry_name(text)
    return kernels.make_kernel(name, grid, **kw)


def _write_trace(scenario, sdir, columns, rows, artifacts):
    if scenario.wants(TRACE_FILE):
        artifacts.append(TraceFileManager.write_csv(os.path.join(sdir, TRACE_FILE), columns, rows))


def _write_profile(scenario, sdir, x, u, artifacts):
    if scenario.wants(PROFILE_FILE):
        artifacts.append(TraceFileManager.write_profile(os.path.join(sdir, PROFILE_FILE), x, u))


def _write_report(scenario, sdir, record, artifacts):
    if scenario.wants(REPORT_FILE):
        artifacts.append(TraceFileManager.write_json(os.path.join(sdir, REPORT_FILE), record))


def analyze_trace(energy_values, grads, steps=None, times=None, tail_fraction=0.5, h_limit="last"):
    """
    Lojasiewicz fit of an energy/gradient sequence. With step norms the
    decay of the remaining path length is classified and the l1 tail bound
    checked with trajectory-wide constants.

    Returns (record, tail_report); tail_report is None without step norms.
    """
    energy_values = np.asarray(energy_values, dtype=float)
    grads = np.asarray(grads, dtype=float)
    fit = estimate_exponent(energy_values, grads, tail_fraction=tail_fraction, h_limit=h_limit)
    decay = tail = descent = None
    c_min = None
    if steps is not None:
        steps = np.asarray(steps, dtype=float)
        times = np.arange(len(energy_values), dtype=float) if times is None else np.asarray(times, dtype=float)
        try:
            decay = classify_decay(
                times, _tail_lengths(steps), limit=0.0, theta=fit.theta, tail_fraction=tail_fraction
            )
        except InsufficientData as exc:
            logger.warning("Decay not classified: %s", exc)
        c_min, sigma = LojaStatsCalculator.empirical_constants(
            energy_values, grads, steps, fit.theta, fit.h_limit
        )
        descent = MonitorReport(details={"best_sigma": sigma})
        if c_min and sigma and c_min > 0 and sigma > 0:
            trace = IterateTrace(energies=list(energy_values), step_norms=list(steps))
            tail = l1_tail_bound_check(trace, c_min, sigma, fit.theta, h_limit=fit.h_limit)
        else:
            logger.warning("No positive trajectory constants, l1 tail bound skipped")
    record = rate_report(fit, decay, tail, descent)
    record["c_min"] = c_min
    return record, tail


def run_optimize(scenario, sdir):
    params = scenario.params
    name, kw = parse_registry_name(params.energy)
    split = energies.get_energy(name, **kw)
    u0 = _start(params.u0, energies.DEFAULT_START[name], split.dim)
    cfg = SolverConfig(
        max_iters=params.max_iters,
        grad_tol=params.grad_tol,
        step_tol=params.step_tol,
        tau=1.0 if params.tau is None else params.tau,
    )
    scheme = params.scheme
    mom = None
    if scheme == "momentum":
        fraction = DEFAULT_BETA_FRACTION if params.beta_fraction is None else params.beta_fraction
        beta = params.beta if params.beta is not None else fraction * 0.5 * (split.kappa + split.mu)
        mom = MomentumSpec(grad_b=lambda u: beta * np.asarray(u, dtype=float), beta=beta)
    elif scheme in ("polyak", "nesterov"):
        beta = DEFAULT_POLYAK_BETA if params.beta is None else params.beta
        energy = energies.as_energy(split)
        tau = momentum_tau(energy) if params.tau is None else params.tau
        split, mom = polyak_momentum(energy, tau, beta)
        # the splitting carries tau H, so its gradient is scaled too
        cfg.grad_tol = params.grad_tol * tau
    trace = run("momentum" if scheme == "polyak" else scheme, split, u0, cfg, mom)

    converged = trace.stop_reason in CONVERGED_REASONS
    report = MonitorReport(
        details={
            "stop_reason": trace.stop_reason,
            "iterations": len(trace.step_norms),
            "final_energy": trace.energies[-1],
            "final_grad_norm": trace.grad_norms[-1],
        }
    )
    if scheme in ("polyak", "nesterov"):
        report.details["tau"] = tau
    if params.expect_convergence:
        report.checks["converged"] = converged
    if scheme in ("dca", "semi_implicit", "dual"):
        report.merge(check_energy_monotone(trace, split))
        descent = check_strong_descent(trace, params.sigma or 0.0)
        report.checks["descent"] = descent.checks["primary"]
        report.checks["complementary"] = descent.checks["complementary"]
        report.details["best_sigma"] = descent.details["best_sigma"]
    elif scheme in ("momentum", "polyak"):
        report.merge(check_doubled_monotone(trace))

    artifacts = []
    columns, rows = TraceFileManager.optimize_rows(trace)
    _write_trace(scenario, sdir, columns, rows, artifacts)
    if params.diagnose and converged:
        try:
            record, tail = analyze_trace(
                trace.energies,
                trace.grad_norms,
                trace.step_norms,
                h_limit=params.h_limit,
            )
        except (InsufficientData, NonMonotoneTail) as exc:
            logger.warning("%s: rate fit unavailable: %s", scenario.id, exc)
            report.details["rate_fit"] = f"unavailable: {exc}"
        else:
            report.details["theta"] = record["theta"]
            report.details["c"] = record["c"]
            report.details["model"] = record["model"]
            if tail is not None:
                report.checks["l1_tail"] = tail.checks["l1_tail"]
            _write_report(scenario, sdir, record, artifacts)
    return report, artifacts


def _entropy_checks(report, sys, trace, f_tilde, quad_coeff):
    spec = lotka_volterra.EntropySpec.for_system(sys, np.asarray(f_tilde, dtype=float), quad_coeff)
    lotka_volterra.fill_entropies(trace, sys, spec)
    trap = lotka_volterra.entropy_trap_monitor(sys, trace, spec.f_tilde, spec)
    report.checks["entropy_trapped"] = trap.checks["trapped"]
    report.details["entropy_transient_increases"] = trap.details["transient_increases"]
    F = np.asarray(trace.entropies, dtype=float)
    report.checks["entropy_to_zero"] = bool(abs(F[-1]) <= 1e-6 * max(1.0, abs(F[0])))
    report.details["final_entropy"] = float(F[-1])


def _lv_details(report, sys, trace):
    pops = trace.populations()
    report.details["equilibrium_residual"] = lotka_volterra.equilibrium_residual(sys, pops[-1])
    report.details["steps"] = len(trace.states) - 1
    for i, value in enumerate(pops[-1]):
        report.details[f"f{i}"] = float(value)


def run_lv_continuous(scenario, sdir):
    params = scenario.params
    sys = _system(params.system, scenario.seed)
    f0 = np.asarray(params.f0 if params.f0 is not None else lotka_volterra.default_start(sys), dtype=float)
    if params.variable == "f":
        trace = lotka_volterra.integrate_continuous(sys, f0, params.dt, params.t_end, params.record_every)
    else:
        trace = lotka_volterra.integrate_sqrt(sys, np.sqrt(f0), params.dt, params.t_end, params.record_every)
    report = lotka_volterra.lv_monitors(trace)
    if params.expect_convergence:
        report.checks["converged"] = trace.converged
    if params.f_tilde is not None:
        _entropy_checks(report, sys, trace, params.f_tilde, 0.0)
    _lv_details(report, sys, trace)
    artifacts = []
    columns, rows = TraceFileManager.lv_rows(trace)
    _write_trace(scenario, sdir, columns, rows, artifacts)
    return report, artifacts


def run_lv_discrete(scenario, sdir):
    params = scenario.params
    sys = _system(params.system, scenario.seed)
    f0 = np.asarray(params.f0 if params.f0 is not None else lotka_volterra.default_start(sys), dtype=float)
    quad_coeff = 0.0
    if params.scheme == "shahshahani":
        lam = lotka_volterra.spectral_radius(sys.B) if params.lam is None else params.lam
        trace = lotka_volterra.run_discrete(sys, f0, params.tau, lam=lam, max_iters=params.max_iters)
        report = lotka_volterra.shahshahani_properties(trace, sys, lam, params.tau)
        report.merge(lotka_volterra.lv_monitors(trace), prefix="lv_")
        quad_coeff = 0.5 * lam * params.tau
    else:
        if params.scheme == "dca":
            trace = lotka_volterra.run_dca_lv(sys, np.sqrt(f0), max_iters=params.max_iters)
        else:
            trace = lotka_volterra.run_semi_implicit_lv(
                sys, np.sqrt(f0), params.tau, max_iters=params.max_iters
            )
        report = lotka_volterra.lv_monitors(trace)
        H = np.asarray(trace.h_energies, dtype=float)
        rise = float(np.max(np.diff(H))) if H.size > 1 else 0.0
        report.checks["H_monotone"] = rise <= 1e-10 * max(1.0, float(np.max(np.abs(H))))
        report.details["worst_H_increase"] = rise
    if params.expect_convergence:
        report.checks["converged"] = trace.converged
    if params.f_tilde is not None:
        _entropy_checks(report, sys, trace, params.f_tilde, quad_coeff)
    _lv_details(report, sys, trace)
    artifacts = []
    columns, rows = TraceFileManager.lv_rows(trace)
    _write_trace(scenario, sdir, columns, rows, artifacts)
    return report, artifacts


def run_lv_mutation(scenario, sdir):
    params = scenario.params
    grid = lotka_volterra.IntervalGrid(params.n)
    level = math.sqrt(params.a / params.b)
    u0 = level * (1.0 + params.perturbation * np.cos(math.pi * grid.x))
    trace = lotka_volterra.run_mutation(
        grid, params.a, params.b, params.dt, u0, params.n_steps, params.diffusion
    )
    H = np.asarray(trace.h_energies, dtype=float)
    rise = float(np.max(np.diff(H))) if H.size > 1 else 0.0
    report = MonitorReport(
        checks={
            "positivity": bool(np.all(np.asarray(trace.min_components) > 0)),
            "energy_monotone": rise <= 1e-10 * max(1.0, float(np.max(np.abs(H)))),
        },
        details={"worst_energy_increase": rise, "final_energy": float(H[-1])},
    )
    artifacts = []
    columns, rows = TraceFileManager.mutation_rows(trace)
    _write_trace(scenario, sdir, columns, rows, artifacts)
    _write_profile(scenario, sdir, grid.x, trace.final, artifacts)
    return report, artifacts


def _deviation(trace, u_bar):
    return np.maximum(trace.series("u_max") - u_bar, u_bar - trace.series("u_min"))


def _cd_evolve(params, n, frame_every=None):
    grid = kernels.TorusGrid(params.L, n)
    kernel = _kernel(params.kernel, grid)
    state = conc_disp.seed_initial(grid, params.p, params.delta, params.normalize)
    trace = conc_disp.evolve(
        state,
        kernel,
        params.dt,
        params.t_end,
        stepper=params.stepper,
        record_every=params.record_every,
        frame_every=frame_every,
        stop_tol=params.stop_tol,
    )
    return grid, kernel, trace


def refinement_check(coarse, fine):
    """
    Sup difference between a limit on n nodes and one on 2n nodes, compared
    on the shared nodes.
    """
    diff = float(np.max(np.abs(np.asarray(fine)[::2] - np.asarray(coarse))))
    return MonitorReport(checks={"refinement": diff < REFINEMENT_TOL}, details={"refinement_diff": diff})


def run_cd(scenario, sdir):
    params = scenario.params
    grid, kernel, trace = _cd_evolve(params, params.n, params.frame_every)
    report = conc_disp.functional_monitors(trace)
    if trace.converged:
        report.checks["lp1_converged"] = report.details["lp1_gap"] <= LP1_LIMIT_TOL
    if params.refine:
        _, _, fine = _cd_evolve(params, 2 * params.n)
        report.merge(refinement_check(trace.final, fine.final))
    report.merge(conc_disp.pointwise_bounds(trace, kernel), prefix="bound_")
    if params.frame_every:
        bad = conc_disp.frames_bell_shaped(trace)
        report.checks["bell_shaped"] = not bad
        report.details["non_bell_frames"] = len(bad)

    factor = conc_disp.mode1_factor(params.L, params.p, kernel.spec)
    u_bar = conc_disp.constant_equilibrium(params.L, params.p)
    dev = _deviation(trace, u_bar)
    report.details["mode1_factor"] = factor
    report.details["final_deviation"] = float(dev[-1])
    if params.delta:
        if factor > 0:
            report.checks["instability_consistent"] = bool(np.max(dev) > dev[0] * (1.0 + 1e-6))
        else:
            report.checks["instability_consistent"] = bool(dev[-1] < dev[0])
    report.details["halvings"] = trace.halvings

    artifacts = []
    columns, rows = TraceFileManager.cd_rows(trace)
    _write_trace(scenario, sdir, columns, rows, artifacts)
    _write_profile(scenario, sdir, grid.x, trace.final, artifacts)
    return report, artifacts


def continuation_check(family):
    """
    Unregularized residuals along a decreasing epsilon family: they must
    shrink, and residual/eps must stay within a constant factor.
    """
    eps = np.array([entry["epsilon"] for entry in family])
    res = np.array([entry["cd_residual"] for entry in family])
    ratios = res / np.where(eps > 0, eps, np.nan)
    spread = float(np.nanmax(ratios) / np.nanmin(ratios)) if np.any(np.isfinite(ratios)) else math.inf
    return MonitorReport(
        checks={
            "continuation_converged": all(entry["converged"] for entry in family),
            "continuation_monotone": bool(np.all(np.diff(res) < 0)),
            "continuation_linear": spread <= CONTINUATION_FACTOR,
        },
        details={"continuation_residuals": [float(r) for r in res], "continuation_spread": spread},
    )


def run_regcd(scenario, sdir):
    params = scenario.params
    grid = kernels.TorusGrid(params.L, params.n)
    kernel = _kernel(params.kernel, grid)
    cfg = RegCDConfig(
        epsilon=params.epsilon,
        grid=grid,
        p=params.p,
        dt_cfl_safety=params.cfl_safety,
        derivative=params.derivative,
        dt_max=params.dt_max,
    )
    u0 = conc_disp.seed_initial(grid, params.p, params.delta, params.normalize).u
    trace = reg_evolve(
        u0,
        kernel,
        cfg,
        params.t_end,
        record_every=params.record_every,
        frame_every=params.frame_every,
        converge_tol=params.converge_tol,
        sustain=params.sustain,
    )
    report = conc_disp.functional_monitors(trace)
    report.checks["converged"] = trace.converged
    factor = reg_stability_factor(params.L, params.p, params.epsilon, kernel.spec)
    u_bar = conc_disp.constant_equilibrium(params.L, params.p)
    deviation = float(np.max(np.abs(trace.final - u_bar)))
    report.details["stability_factor"] = factor
    report.details["final_deviation"] = deviation
    report.details["reg_residual"] = trace.records[-1].reg_residual
    report.details["cd_residual"] = trace.records[-1].residual
    if trace.converged:
        report.checks["lp1_converged"] = report.details["lp1_gap"] <= LP1_LIMIT_TOL
        report.checks["reg_residual"] = trace.records[-1].reg_residual < REG_RESIDUAL_TOL
    if params.continuation:
        family = epsilon_continuation(
            sorted(params.continuation, reverse=True),
            u0,
            kernel,
            params.p,
            params.continuation_t_end,
            converge_tol=params.converge_tol,
            sustain=params.sustain,
        )
        report.merge(continuation_check(family))
    if factor > 0 and params.delta:
        report.checks["nontrivial_limit"] = deviation > 0.05 * u_bar
    for warning in trace.warnings:
        logger.warning("%s: %s", scenario.id, warning)
    if len(trace.frames) >= 10:
        try:
            fit = decay_fit(trace)
        except InsufficientData as exc:
            logger.warning("%s: decay not classified: %s", scenario.id, exc)
        else:
            report.details["decay_model"] = fit.model
            report.details["decay_rate"] = fit.rate
            report.details["decay_r2"] = fit.r2
            report.checks["decay_definite"] = fit.r2 > 0.95

    artifacts = []
    columns, rows = TraceFileManager.cd_rows(trace, regularized=True)
    _write_trace(scenario, sdir, columns, rows, artifacts)
    _write_profile(scenario, sdir, grid.x, trace.final, artifacts)
    return report, artifacts


def lorentz_profile(x, c):
    """
    The solution of u = K * u^2 for K^ = 1/(c + k^2): (3c/2) sech^2(sqrt(c) x / 2).
    """
    return 1.5 * c / np.cosh(0.5 * math.sqrt(c) * np.asarray(x, dtype=float)) ** 2


def regularized_limit_check(profile, kernel, params):
    """
    Run the regularized flow with a small epsilon on the same grid and
    kernel, rescale its limit by c^(1/(p-1)) onto the fixed point
    normalization and compare with the fixed-point profile.
    """
    grid = kernel.grid
    cfg = RegCDConfig(epsilon=params.cross_epsilon, grid=grid, p=params.p)
    u0 = conc_disp.seed_initial(grid, params.p, 0.5 * conc_disp.constant_equilibrium(grid.L, params.p)).u
    trace = reg_evolve(u0, kernel, cfg, params.cross_t_end)
    c = trace.records[-1].c
    phi = trace.final / c ** (1.0 / (params.p - 1.0))
    diff = float(np.max(np.abs(conc_disp.align(phi, profile) - profile)))
    logger.info("regularized limit differs from the fixed point by %.3e", diff)
    return MonitorReport(
        checks={"cross_converged": trace.converged, "cross_match": diff < CROSS_CHECK_TOL},
        details={"cross_diff": diff, "cross_c": c},
    )


def run_petviashvili(scenario, sdir):
    params = scenario.params
    grid = kernels.TorusGrid(params.L, params.n)
    kernel = _kernel(params.kernel, grid)
    u0 = params.amplitude * np.exp(-((grid.x / params.width) ** 2))
    try:
        result = conc_disp.petviashvili_solve(u0, kernel, params.p, params.gamma, params.tol, params.max_iter)
    except PetviashviliDiverged as exc:
        if not params.expect_divergence:
            raise
        logger.info("%s diverged as expected: %s", scenario.id, exc)
        return MonitorReport(checks={"diverged": True}, details={"error": str(exc)}), []
    report = MonitorReport(
        checks={"converged": result.converged},
        details={
            "iterations": result.iterations,
            "final_stabilizer": result.stabilizers[-1] if result.stabilizers else None,
        },
    )
    if params.expect_divergence:
        report.checks["diverged"] = False
    u = result.u
    fixed = grid.l2_norm(u - kernels.convolve(kernel, np.abs(u) ** params.p))
    report.details["fixed_point_residual"] = fixed
    report.checks["fixed_point"] = fixed < 1e-8 * max(1.0, float(np.max(np.abs(u))))
    if kernel.spec.name == "lorentz" and params.p == 2:
        exact = lorentz_profile(grid.x, kernel.spec.params["c"])
        error = float(np.max(np.abs(conc_disp.align(u, exact) - exact)))
        report.details["closed_form_error"] = error
        report.checks["closed_form"] = error < 1e-6
    if params.cross_check:
        report.merge(regularized_limit_check(u, kernel, params))

    artifacts = []
    columns, rows = TraceFileManager.petviashvili_rows(result)
    _write_trace(scenario, sdir, columns, rows, artifacts)
    _write_profile(scenario, sdir, grid.x, u, artifacts)
    return report, artifacts


def diagnose(trace_path, tail_fraction=0.5, h_limit="last", report_path=None):
    """
    Rate report of a trace CSV, written as JSON beside the trace unless
    report_path says otherwise.
    """
    cols = TraceFileManager.read_trace_csv(trace_path)
    steps = cols.get("step_norm")
    if steps is not None:
        steps = steps[1:]
        if not np.all(np.isfinite(steps)):
            logger.warning("step_norm column has gaps, path diagnostics skipped")
            steps = None
    times = cols.get("t", cols.get("step"))
    record, _ = analyze_trace(
        cols["energy"],
        cols["grad_norm"],
        steps,
        times,
        tail_fraction=tail_fraction,
        h_limit=h_limit,
    )
    record["trace"] = os.path.basename(trace_path)
    if report_path is None:
        report_path = os.path.splitext(trace_path)[0] + ".rate_report.json"
    TraceFileManager.write_json(report_path, record)
    logger.info("theta=%.4f (%s) for %s", record["theta"], record["model"], trace_path)
    return record


def run_diagnose(scenario, sdir):
    params = scenario.params
    out = os.path.join(sdir, REPORT_FILE)
    record = diagnose(params.trace, params.tail_fraction, params.h_limit, report_path=out)
    report = MonitorReport(
        checks={"rate_fit": True},
        details={k: record[k] for k in ("theta", "c", "model", "fit_r2")},
    )
    if record.get("l1_tail") is not None:
        report.checks["l1_tail"] = record["l1_tail"]
    return report, [out]


RUNNERS = {
    "optimize": run_optimize,
    "lv_continuous": run_lv_continuous,
    "lv_discrete": run_lv_discrete,
    "lv_mutation": run_lv_mutation,
    "cd": run_cd,
    "regcd": run_regcd,
    "petviashvili": run_petviashvili,
    "diagnose": run_diagnose,
}


def run_scenario(scenario, out_dir=DEFAULT_OUTPUT_DIR):
    """
    Run one scenario. Errors are caught and recorded on the result.
    """
    sdir = TraceFileManager.scenario_dir(out_dir, scenario.id)
    try:
        report, artifacts = RUNNERS[scenario.kind](scenario, sdir)
    except (GradflowError, ValueError, FileNotFoundError) as exc:
        logger.error("Scenario %s failed: %s: %s", scenario.id, type(exc).__name__, exc)
        return ScenarioResult.from_error(scenario, exc)
    artifacts = [os.path.relpath(path, out_dir) for path in artifacts]
    result = ScenarioResult.from_report(scenario, report, artifacts)
    failed = sorted(k for k, v in result.monitors.items() if not v)
    if failed:
        logger.info("Scenario %s: fail (%s)", scenario.id, ", ".join(failed))
    else:
        logger.info("Scenario %s: pass", scenario.id)
    return result


def _run_payload(payload, out_dir):
    # workers rebuild the scenario from plain data
    scenario = Scenario.model_validate(payload)
    return run_scenario(scenario, out_dir).model_dump()


def run_all(scenarios, jobs=1, out_dir=DEFAULT_OUTPUT_DIR):
    """
    Run scenarios on `jobs` worker processes and write summary.json.
    Results come back in id order whatever the completion order.
    """
    os.makedirs(out_dir, exist_ok=True)
    if jobs <= 1 or len(scenarios) <= 1:
        results = [run_scenario(s, out_dir) for s in scenarios]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_payload, s.model_dump(), out_dir) for s in scenarios]
            results = [ScenarioResult.model_validate(f.result()) for f in futures]
    summary = RunSummary(scenarios=sorted(results, key=lambda r: r.id))
    TraceFileManager.write_summary(out_dir, summary)
    return summary


def _defaults(factory):
    sig = inspect.signature(factory)
    return {
        name: p.default
        for name, p in sig.parameters.items()
        if p.default is not inspect.Parameter.empty
    }


def registry():
    """
    Registry entries with their keyword defaults.
    """
    energy_entries = [
        {
            "name": name,
            "params": _defaults(energies.ENERGIES[name]),
            "theta": energies.ENERGY_THETA[name],
        }
        for name in energies.SUPPORTED_ENERGIES
    ]
    system_entries = [
        {"name": name, "params": _defaults(factory)}
        for name, factory in lotka_volterra.SYSTEMS.items()
    ]
    kernel_entries = [
        {"name": name, "params": _defaults(factory)}
        for name, factory in kernels.KERNELS.items()
    ]
    return {"energies": energy_entries, "systems": system_entries, "kernels": kernel_entries}
