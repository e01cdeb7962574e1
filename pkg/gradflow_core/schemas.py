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
Pydantic models for scenario configs and run results.
"""

import re
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator

from .constants import PROFILE_FILE, REPORT_FILE, SCENARIO_KINDS, TRACE_FILE
from .dc_optim import momentum_tau
from .energies import SUPPORTED_ENERGIES, as_energy, get_energy
from .errors import GradflowError
from .kernels import KERNELS, get_kernel
from .lotka_volterra import SYSTEMS, get_system

_NAME_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*$")
_INT_RE = re.compile(r"^[+-]?\d+$")

ARTIFACT_FILES = [TRACE_FILE, PROFILE_FILE, REPORT_FILE]
MOMENTUM_SCHEMES = ("polyak", "nesterov")


def parse_registry_name(text):
    """
    Split "name(key=value, ...)" into the name and a parameter dict.
    Values are read as int when they look like one, float otherwise.
    """
    match = _NAME_RE.match(text)
    if not match:
        raise ValueError(f"Malformed registry name: {text!r}")
    name, args = match.group(1), match.group(2)
    params = {}
    if args and args.strip():
        for part in args.split(","):
            if "=" not in part:
                raise ValueError(f"Registry parameter needs key=value: {part.strip()!r}")
            key, value = (s.strip() for s in part.split("=", 1))
            try:
                params[key] = int(value) if _INT_RE.match(value) else float(value)
            except ValueError as exc:
                raise ValueError(f"Registry parameter {key} is not a number: {value!r}") from exc
    return name, params


def _check_name(text, names, build, what):
    # building the entry surfaces bad keyword arguments at load time
    name, params = parse_registry_name(text)
    if name not in names:
        raise ValueError(f"Unknown {what} {name!r}, expected one of {sorted(names)}")
    try:
        build(name, **params)
    except (TypeError, GradflowError) as exc:
        raise ValueError(f"Cannot build {what} {text!r}: {exc}") from exc
    return text


def _energy(text):
    name, params = parse_registry_name(text)
    return as_energy(get_energy(name, **params))


class _Params(BaseModel):
    model_config = ConfigDict(extra="forbid")


class OptimizeParams(_Params):
    energy: str
    scheme: Literal["dca", "semi_implicit", "momentum", "dual", "polyak", "nesterov"] = "dca"
    u0: Optional[List[float]] = None
    max_iters: int = 1000
    grad_tol: float = 1e-10
    step_tol: float = 1e-15
    tau: Optional[float] = None
    beta: Optional[float] = None
    beta_fraction: Optional[float] = None
    sigma: Optional[float] = None
    diagnose: bool = True
    h_limit: Union[Literal["last", "aitken", "fit"], float] = "last"
    expect_convergence: bool = True

    @field_validator("energy")
    @classmethod
    def energy_resolves(cls, v):
        return _check_name(v, SUPPORTED_ENERGIES, get_energy, "energy")

    @field_validator("tau")
    @classmethod
    def tau_fits_splitting(cls, v, info):
        if v is None:
            return v
        if not v > 0:
            raise ValueError(f"tau must be positive, got {v}")
        if info.data.get("scheme") in MOMENTUM_SCHEMES and "energy" in info.data:
            lip = _energy(info.data["energy"]).lip or 0.0
            if v * lip >= 2.0:
                raise ValueError(f"tau * L must stay below 2 for the heavy-ball splitting, got {v:g} * {lip:g}")
        return v

    @field_validator("beta")
    @classmethod
    def beta_in_regime(cls, v, info):
        if v is None or info.data.get("scheme") not in MOMENTUM_SCHEMES or "energy" not in info.data:
            return v
        energy = _energy(info.data["energy"])
        tau = info.data.get("tau") or momentum_tau(energy)
        bound = 1.0 - 0.5 * tau * (energy.lip or 0.0)
        if not 0 <= v < bound:
            raise ValueError(f"beta must lie in [0, {bound:g}) for tau={tau:g}, got {v:g}")
        return v


class LVContinuousParams(_Params):
    system: str
    f0: Optional[List[float]] = None
    dt: float = 0.01
    t_end: float = 50.0
    variable: Literal["f", "u"] = "f"
    f_tilde: Optional[List[float]] = None
    expect_convergence: bool = True
    record_every: int = 1

    @field_validator("system")
    @classmethod
    def system_resolves(cls, v):
        return _check_name(v, SYSTEMS, get_system, "system")


class LVDiscreteParams(_Params):
    system: str
    scheme: Literal["shahshahani", "dca", "semi_implicit"] = "shahshahani"
    f0: Optional[List[float]] = None
    tau: float = 0.1
    lam: Optional[float] = None
    max_iters: int = 10000
    f_tilde: Optional[List[float]] = None
    expect_convergence: bool = True

    @field_validator("system")
    @classmethod
    def system_resolves(cls, v):
        return _check_name(v, SYSTEMS, get_system, "system")


class LVMutationParams(_Params):
    n: int = 64
    a: float = 1.0
    b: float = 1.0
    dt: float = 0.01
    n_steps: int = 1000
    diffusion: float = 1.0
    perturbation: float = 0.1


class CDParams(_Params):
    kernel: str = "gaussian(sigma=1)"
    L: float = 20.0
    n: int = 256
    p: float = 2.0
    delta: float = 0.05
    normalize: bool = False
    dt: float = 0.05
    t_end: float = 100.0
    stepper: Literal["rk4", "integrating_factor"] = "rk4"
    record_every: int = 1
    frame_every: Optional[int] = None
    stop_tol: Optional[float] = None
    refine: bool = False

    @field_validator("kernel")
    @classmethod
    def kernel_resolves(cls, v):
        return _check_name(v, KERNELS, get_kernel, "kernel")


class RegCDParams(_Params):
    kernel: str = "gaussian(sigma=1)"
    epsilon: float = 1e-3
    L: float = 20.0
    n: int = 256
    p: float = 2.0
    delta: float = 0.05
    normalize: bool = False
    t_end: float = 200.0
    dt_max: float = 0.1
    cfl_safety: float = 0.25
    derivative: Literal["spectral", "central"] = "spectral"
    record_every: int = 1
    frame_every: Optional[int] = None
    converge_tol: float = 1e-9
    sustain: int = 100
    continuation: Optional[List[float]] = None
    continuation_t_end: float = 200.0

    @field_validator("kernel")
    @classmethod
    def kernel_resolves(cls, v):
        return _check_name(v, KERNELS, get_kernel, "kernel")

    @field_validator("continuation")
    @classmethod
    def continuation_positive(cls, v):
        if v is not None and (len(v) < 2 or min(v) <= 0):
            raise ValueError("continuation needs at least two positive epsilons")
        return v


class PetviashviliParams(_Params):
    kernel: str = "lorentz(c=1)"
    L: float = 40.0
    n: int = 512
    p: float = 2.0
    gamma: float = 2.0
    amplitude: float = 2.0
    width: float = 2.0
    tol: float = 1e-13
    max_iter: int = 2000
    expect_divergence: bool = False
    cross_check: bool = False
    cross_epsilon: float = 1e-4
    cross_t_end: float = 400.0

    @field_validator("kernel")
    @classmethod
    def kernel_resolves(cls, v):
        return _check_name(v, KERNELS, get_kernel, "kernel")


class DiagnoseParams(_Params):
    trace: str
    tail_fraction: float = 0.5
    h_limit: Union[Literal["last", "aitken", "fit"], float] = "last"


PARAMETER_MODELS = {
    "optimize": OptimizeParams,
    "lv_continuous": LVContinuousParams,
    "lv_discrete": LVDiscreteParams,
    "lv_mutation": LVMutationParams,
    "cd": CDParams,
    "regcd": RegCDParams,
    "petviashvili": PetviashviliParams,
    "diagnose": DiagnoseParams,
}

assert set(PARAMETER_MODELS) == set(SCENARIO_KINDS)


class Scenario(BaseModel):
    """
    One experiment. The kind picks the parameter model; params validates
    the raw parameter mapping on first access.
    """

    model_config = ConfigDict(extra="forbid")

    id: str
    kind: Literal[
        "optimize",
        "lv_continuous",
        "lv_discrete",
        "lv_mutation",
        "cd",
        "regcd",
        "petviashvili",
        "diagnose",
    ]
    seed: int = 0
    parameters: Dict[str, Any] = {}
    outputs: List[str] = []

    _params: Any = PrivateAttr(default=None)

    @field_validator("outputs")
    @classmethod
    def outputs_known(cls, v):
        unknown = sorted(set(v) - set(ARTIFACT_FILES))
        if unknown:
            raise ValueError(f"Unknown outputs {unknown}, expected a subset of {ARTIFACT_FILES}")
        return v

    @property
    def params(self):
        if self._params is None:
            self._params = PARAMETER_MODELS[self.kind].model_validate(self.parameters)
        return self._params

    def wants(self, artifact):
        return not self.outputs or artifact in self.outputs


def _scalar_details(details):
    # only scalars go into the summary, long series live in the artifacts
    out = {}
    for key, value in details.items():
        if isinstance(value, (bool, np.bool_)):
            out[key] = bool(value)
        elif isinstance(value, (int, np.integer)):
            out[key] = int(value)
        elif isinstance(value, (float, np.floating)):
            out[key] = float(value)
        elif value is None or isinstance(value, str):
            out[key] = value
    return out


class ScenarioResult(BaseModel):
    id: str
    kind: str
    status: Literal["pass", "fail", "error"]
    monitors: Dict[str, bool] = {}
    details: Dict[str, Any] = {}
    artifacts: List[str] = []
    error: Optional[str] = None

    @classmethod
    def from_report(cls, scenario, report, artifacts):
        """Build a result from a scenario's merged MonitorReport"""
        return cls(
            id=scenario.id,
            kind=scenario.kind,
            status="pass" if report.passed else "fail",
            monitors={k: bool(v) for k, v in report.checks.items()},
            details=_scalar_details(report.details),
            artifacts=artifacts,
        )

    @classmethod
    def from_error(cls, scenario, exc):
        return cls(
            id=scenario.id,
            kind=scenario.kind,
            status="error",
            error=f"{type(exc).__name__}: {exc}",
        )


class RunSummary(BaseModel):
    scenarios: List[ScenarioResult] = []

    @property
    def passed(self):
        return all(r.status == "pass" for r in self.scenarios)
