"""Orthogonal projections onto polynomial spline spaces over arbitrary
knot sequences, with the empirical machinery around them: dual-basis
decay, maximal inequalities, accumulation-region limit bases, and
martingale-style convergence experiments."""

__version__ = "0.1.0"

from .knots import (KnotProgram, Grid, Decomposition, realize, mesh_width,
                    grid_interval, anchor_index, hull_length, decompose,
                    estimate_accumulation)
from .bspline import (SplineSpace, Spline, eval_basis, eval_basis_many,
                      basis_integral, insert_knot, refine)
from .gram import (BandedSPDMatrix, DecayFit, gram_matrix, dual_coefficients,
                   eval_dual, fit_decay)
from .functions import (FunctionSpec, MeasureSpec, make_function, make_measure,
                        devil_staircase, cantor_cells)
from .projection import (project_function, project_spline, project_measure,
                         check_self_adjoint, shadrin_probe, maximal_function,
                         check_maximal_inequality, modulus_of_smoothness,
                         jackson_check)
from .convergence import (SplineMartingale, make_martingale, functional_T,
                          LimitBasis, build_limit_basis, PredictedLimit,
                          predicted_limit, ConvergenceReport,
                          singular_decay_experiment, convergence_report)

__all__ = [
    "KnotProgram", "Grid", "Decomposition", "realize", "mesh_width",
    "grid_interval", "anchor_index", "hull_length", "decompose",
    "estimate_accumulation",
    "SplineSpace", "Spline", "eval_basis", "eval_basis_many",
    "basis_integral", "insert_knot", "refine",
    "BandedSPDMatrix", "DecayFit", "gram_matrix", "dual_coefficients",
    "eval_dual", "fit_decay",
    "FunctionSpec", "MeasureSpec", "make_function", "make_measure",
    "devil_staircase", "cantor_cells",
    "project_function", "project_spline", "project_measure",
    "check_self_adjoint", "shadrin_probe", "maximal_function",
    "check_maximal_inequality", "modulus_of_smoothness", "jackson_check",
    "SplineMartingale", "make_martingale", "functional_T",
    "LimitBasis", "build_limit_basis", "PredictedLimit", "predicted_limit",
    "ConvergenceReport", "singular_decay_experiment", "convergence_report",
]
