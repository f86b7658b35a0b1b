"""Joint representation classification with mixed l_{2,q}-l_{2,p} coding."""

from .classifier import (
    ClassificationResult,
    Dictionary,
    classify,
    per_class_residuals,
    robust_classify,
)
from .matrixcore import (
    NormExponents,
    NumericalBreakdown,
    ShapeError,
    mixed_norm_pow,
    objective_J,
    row_l2_norms,
    weight_G,
    weight_H,
)
from .solver import ConvergenceTrace, SolverConfig, iqm_solve, stationarity_residual

__version__ = "0.1.0"

__all__ = [
    "ClassificationResult",
    "ConvergenceTrace",
    "Dictionary",
    "NormExponents",
    "NumericalBreakdown",
    "ShapeError",
    "SolverConfig",
    "classify",
    "iqm_solve",
    "mixed_norm_pow",
    "objective_J",
    "per_class_residuals",
    "robust_classify",
    "row_l2_norms",
    "stationarity_residual",
    "weight_G",
    "weight_H",
]
