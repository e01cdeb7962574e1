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
Constants shared by the gradflow modules: default locations, numerical
tolerances and the artifact column layouts.
"""

import os

# Default directory for run artifacts is "gradflow-runs" in the working directory
DEFAULT_OUTPUT_DIR = os.path.join(os.getcwd(), "gradflow-runs")

# Floating point output format, 17 significant digits round-trips a double
FLOAT_FORMAT = "{:.17g}"

# dc_optim
NEWTON_TOL = 1e-12
NEWTON_MAX = 100
DIVERGENCE_NORM = 1e12
DESCENT_SLACK = 1e-12
ENERGY_EQUALITY_TOL = 1e-12
MONOTONE_SLACK = 1e-10
SUPPORTED_SCHEMES = ["dca", "semi_implicit", "momentum", "dual", "nesterov"]
STOP_REASONS = ["gradient_tol", "step_tol", "max_iters", "diverged"]

# loja_diag
TAIL_FRACTION = 0.5
CLASSIFICATION_TOL = 0.05
EXCLUSION_FACTOR = 100.0
MIN_SAMPLES = 10
H_LIMIT_MODES = ["last", "aitken", "fit"]

# lotka_volterra
K_SET_TOL = 1e-8
EXTINCTION_TOL = 1e-12
CUBIC_RESIDUAL = 1e-13
S_FIXED_POINT_TOL = 1e-12
S_FIXED_POINT_MAX = 500
POWER_ITERATION_TOL = 1e-12
POWER_ITERATION_MAX = 100000
PSD_TOL = 1e-10
DEFAULT_EPS_FRACTION = 0.1
MAX_HALVINGS = 30

# conc_disp / reg_conc_disp
MIN_GRID_NODES = 16
PERIODIZATION_TOL = 1e-15
MAX_IMAGES = 100000
F_MONOTONE_SLACK = 1e-10
MANIFOLD_SLACK = 1e-8
MANIFOLD_BAND = 1e-7
BELL_TOL = 1e-10
REG_CONVERGENCE_TOL = 1e-9
REG_CONVERGENCE_SUSTAIN = 100
DEFAULT_CFL_SAFETY = 0.25
PETVIASHVILI_TOL = 1e-13
PETVIASHVILI_GUARD = 1e8
LP1_LIMIT_TOL = 1e-6
REG_RESIDUAL_TOL = 1e-7
REFINEMENT_TOL = 1e-5
CONTINUATION_FACTOR = 3.0
CROSS_CHECK_TOL = 1e-3

# CSV column layouts
OPTIMIZE_COLUMNS = ["step", "energy", "grad_norm", "step_norm"]
LV_COLUMNS = ["step", "t", "E", "F", "min_f", "ratio"]
CD_COLUMNS = ["t", "E", "F", "c", "lp1_norm", "u_min", "u_max", "residual"]
REGCD_COLUMNS = CD_COLUMNS + ["epsilon", "reg_residual", "ux_max", "uxx_max", "uxxx_max"]
MUTATION_COLUMNS = ["step", "t", "H", "min_u"]
PETVIASHVILI_COLUMNS = ["iteration", "stabilizer", "change"]

# artifact file names inside a scenario directory
TRACE_FILE = "trace.csv"
PROFILE_FILE = "profile.txt"
REPORT_FILE = "rate_report.json"
SUMMARY_FILE = "summary.json"

SCENARIO_KINDS = [
    "optimize",
    "lv_continuous",
    "lv_discrete",
    "lv_mutation",
    "cd",
    "regcd",
    "petviashvili",
    "diagnose",
]
