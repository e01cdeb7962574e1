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
Exception hierarchy for gradflow.

Construction and stepping errors raise one of these; diagnostics never raise,
they return reports.
"""


class GradflowError(Exception):
    """
    Base class of every error raised by gradflow_core.
    """


# construction time invariants
class InvalidSplitting(GradflowError):
    pass


class InvalidSystem(GradflowError):
    pass


class InvalidGrid(GradflowError):
    pass


class NotSymmetric(InvalidSystem):
    pass


# dc_optim
class NonConvergedImplicitSolve(GradflowError):
    pass


class NonFinite(GradflowError):
    pass


class Diverged(GradflowError):
    pass


class MissingInverse(GradflowError):
    pass


class StepTooLarge(GradflowError):
    pass


# loja_diag
class InsufficientData(GradflowError):
    pass


class NonMonotoneTail(GradflowError):
    pass


# lotka_volterra and the torus flows
class NonPositiveState(GradflowError):
    pass


class PositivityLost(GradflowError):
    """
    A step produced a non-positive entry. `index` is the first offending
    coordinate when it is known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class TauTooLarge(GradflowError):
    pass


class SFixedPointStalled(GradflowError):
    pass


# conc_disp / reg_conc_disp
class TailNotConverged(GradflowError):
    pass


class SpectrumNonPositive(GradflowError):
    pass


class DegenerateDenominator(GradflowError):
    pass


class PetviashviliDiverged(GradflowError):
    pass


class DeltaTooLarge(GradflowError):
    pass


class CFLStall(GradflowError):
    pass


# harness
class ParseError(GradflowError):
    def __init__(self, message, line=None, key=None):
        super().__init__(message)
        self.line = line
        self.key = key


class ValidationError(GradflowError):
    def __init__(self, message, scenario=None, field=None):
        super().__init__(message)
        self.scenario = scenario
        self.field = field


class SchemaError(GradflowError):
    pass
