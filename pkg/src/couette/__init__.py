"""Numerical toolkit for shear-flow stability around Couette flow.

Implements the hypocoercive mode-by-mode energies, decay multipliers, the
inviscid-damping singular integral operator, and linear/nonlinear perturbation
solvers on the plane, half-plane, infinite channel and beta-plane.
"""

__version__ = "0.1.0"

from .domains import DomainKind, DomainSpec, YGrid, build_grid, green_kernel
from .multipliers import (
    HypoCoefficients,
    eval_lambda,
    eval_weights,
    ghost_multiplier,
    validate_coefficients,
)
from .energy import mode_energy, global_energy, threshold_epsilon

__all__ = [
    "DomainKind",
    "DomainSpec",
    "YGrid",
    "build_grid",
    "green_kernel",
    "HypoCoefficients",
    "eval_lambda",
    "eval_weights",
    "ghost_multiplier",
    "validate_coefficients",
    "mode_energy",
    "global_energy",
    "threshold_epsilon",
]
