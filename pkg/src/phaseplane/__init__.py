"""Phase-plane reduction of second-order oscillators x'' = f(x, x').

The orbit through a turning point (A, 0) is traced as two velocity
branches x' = phi(x); periods follow from integrating dx / phi, and the
gap between the starting amplitude and the second turning point tells
closed orbits from spirals.  A direct time-domain integrator serves as
an independent check.
"""

from . import catalog
from .errors import (ConservativeFamily, DomainError, NoOscillation, NonReturningBranch,
                     NotClosed, NumericalFailure, ParseError, PhasePlaneError)
from .expr import EvalResult, eval_full, parse, to_text
from .oracle import OrbitTrace, el_residual, measure_period, simulate, steady_amplitude
from .period import (PeriodEstimate, period_symmetric, period_two_branch, quad_singular,
                     symmetric_from_report)
from .reduction import (BranchProfile, BranchSpec, ClosureReport, closure_defect,
                        find_limit_cycle_amplitude, integrate_branch, seed_coefficients)
from .separable import G, F, SeparableSystem, phi_separable
from .system import OscillatorSystem

__version__ = "0.1.0"

__all__ = [
    "BranchProfile", "BranchSpec", "ClosureReport", "ConservativeFamily", "DomainError",
    "EvalResult", "F", "G", "NoOscillation", "NonReturningBranch", "NotClosed",
    "NumericalFailure", "OrbitTrace", "OscillatorSystem", "ParseError", "PeriodEstimate",
    "PhasePlaneError", "SeparableSystem", "catalog", "closure_defect", "el_residual",
    "eval_full", "find_limit_cycle_amplitude", "integrate_branch", "measure_period",
    "parse", "period_symmetric", "period_two_branch", "phi_separable", "quad_singular",
    "seed_coefficients", "simulate", "steady_amplitude", "symmetric_from_report", "to_text",
]
