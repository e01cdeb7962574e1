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
gradflow_core - Gradient-like descent schemes and their convergence diagnostics.
Contains the DC optimizers, Lotka-Volterra schemes, the torus flows and the
batch harness shared by the CLI and the tests.

author: Abhishek Mishra
date: 18/10/2026
"""

from .constants import DEFAULT_OUTPUT_DIR, SCENARIO_KINDS, SUPPORTED_SCHEMES
from .errors import GradflowError, ParseError, SchemaError, ValidationError
from .models import CDTrace, IterateTrace, LVTrace, MonitorReport, RateFit, SolverConfig
from .dc_optim import MomentumSpec, SplitEnergy, run
from .energies import get_energy
from .loja_diag import LojaStatsCalculator, classify_decay, estimate_exponent
from .lotka_volterra import LVSystem, build_splitting, get_system
from .kernels import TorusGrid, make_kernel
from .conc_disp import evolve, petviashvili_solve
from .reg_conc_disp import RegCDConfig, reg_evolve
from .schemas import RunSummary, Scenario, ScenarioResult
from .file_operations import TraceFileManager
from .harness import diagnose, registry, run_all, run_scenario
from .display import RunDisplay

__all__ = [
    'DEFAULT_OUTPUT_DIR',
    'SCENARIO_KINDS',
    'SUPPORTED_SCHEMES',
    'GradflowError',
    'ParseError',
    'SchemaError',
    'ValidationError',
    'CDTrace',
    'IterateTrace',
    'LVTrace',
    'MonitorReport',
    'RateFit',
    'SolverConfig',
    'MomentumSpec',
    'SplitEnergy',
    'run',
    'get_energy',
    'LojaStatsCalculator',
    'classify_decay',
    'estimate_exponent',
    'LVSystem',
    'build_splitting',
    'get_system',
    'TorusGrid',
    'make_kernel',
    'evolve',
    'petviashvili_solve',
    'RegCDConfig',
    'reg_evolve',
    'RunSummary',
    'Scenario',
    'ScenarioResult',
    'TraceFileManager',
    'diagnose',
    'registry',
    'run_all',
    'run_scenario',
    'RunDisplay',
]
