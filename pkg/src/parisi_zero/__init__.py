"""Zero-temperature Parisi measures of spherical mixed p-spin models.

The package classifies the phase of the Parisi measure (RS, k-RSB or
k-FRSB) of a mixture ``xi(x) = sum_j lam_j x^{p_j}``, constructs the measure,
verifies its optimality and computes the ground-state energy.  A convex
minimization of the functional on a grid serves as an independent check.
"""
__version__ = "0.1.0"

from .classifier import (ClassificationResult, ClassifyOptions, PhaseLabel, classify,
                         phase_scan, two_component_boundaries)
from .errors import (AmbiguousPhase, NoPhaseFound, NoSolution, NotFound, ParisiError,
                     SearchFailure, ValidationError)
from .hset import condition_kappa, extremal_point, tilde_chain
from .kernels import Chain, h, hbar, hF, r1, r2
from .measure import (ParisiMeasure, cs_energy, measure_from_dict, measure_to_dict,
                      rs_measure, verify_parisi)
from .mixture import MixtureSpec, make_mixture
from .solver import SolverContext, solve_frsb, solve_rsb

__all__ = [
    "AmbiguousPhase", "Chain", "ClassificationResult", "ClassifyOptions", "MixtureSpec",
    "NoPhaseFound", "NoSolution", "NotFound", "ParisiError", "ParisiMeasure", "PhaseLabel",
    "SearchFailure", "SolverContext", "ValidationError", "classify", "condition_kappa",
    "cs_energy", "extremal_point", "h", "hF", "hbar", "make_mixture", "measure_from_dict",
    "measure_to_dict", "phase_scan", "r1", "r2", "rs_measure", "solve_frsb", "solve_rsb",
    "tilde_chain", "two_component_boundaries", "verify_parisi",
]
