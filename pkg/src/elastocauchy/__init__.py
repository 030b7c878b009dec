"""Boundary integral solver for the lateral Cauchy problem of planar elastodynamics.

The time dependence is removed with a Laguerre transform, each resulting
stationary problem is written as a single-layer potential of a fundamental
sequence, and the layer densities are found by a Nystrom method with
Tikhonov regularization.
"""

from .cauchy_solver import (NoiseSpec, SVDSolver, TikhonovConfig, add_noise, errors_stationary,
                            gamma1_traction, gamma1_trace, interior_eval, solve_sequence,
                            tikhonov_solve, transient_error)
from .fundamental import FundamentalSequence, fundamental_matrix, get_sequence, traction_matrix
from .geometry import MaterialParams, circle, kite, make_curve, radial
from .laguerre import LaguerreSeries, laguerre_eval, synthesize, test_signal_coeffs
from .nystrom import (Geometry, KernelBank, NystromGrid, assemble_cauchy, assemble_direct_dirichlet,
                      assemble_direct_neumann)

__version__ = "0.1.0"

__all__ = [
    "NoiseSpec", "SVDSolver", "TikhonovConfig", "add_noise", "errors_stationary", "gamma1_traction",
    "gamma1_trace", "interior_eval", "solve_sequence", "tikhonov_solve", "transient_error",
    "FundamentalSequence", "fundamental_matrix", "get_sequence", "traction_matrix",
    "MaterialParams", "circle", "kite", "make_curve", "radial",
    "LaguerreSeries", "laguerre_eval", "synthesize", "test_signal_coeffs",
    "Geometry", "KernelBank", "NystromGrid", "assemble_cauchy", "assemble_direct_dirichlet",
    "assemble_direct_neumann",
]
