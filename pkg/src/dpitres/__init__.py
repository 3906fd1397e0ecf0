"""Double probability integral transform residuals and ordered curves for
regression models with discrete outcomes."""

from .curve import OrderedCurve, ordered_curve, threshold_from
from .data import Dataset, ModelSpec
from .dpit import (
    ResidualSet,
    altered_residuals,
    combined_residuals,
    dpit_residuals,
    g_hat_loo,
    pit_values,
    to_normal_scale,
)
from .errors import (
    ConvergenceError,
    DegenerateDataError,
    DpitError,
    FitError,
    InsufficientDataError,
    NumericalError,
    ParameterDomainError,
    ParseError,
    ScenarioError,
    SeparationError,
    UnsupportedOperationError,
)
from .fit import FitOptions, FittedModel, fit_mle, fixed_model
from .normal import inverse_normal_cdf, normal_cdf

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "Dataset",
    "DegenerateDataError",
    "DpitError",
    "FitError",
    "FitOptions",
    "FittedModel",
    "InsufficientDataError",
    "ModelSpec",
    "NumericalError",
    "OrderedCurve",
    "ParameterDomainError",
    "ParseError",
    "ResidualSet",
    "ScenarioError",
    "SeparationError",
    "UnsupportedOperationError",
    "altered_residuals",
    "combined_residuals",
    "dpit_residuals",
    "fit_mle",
    "fixed_model",
    "g_hat_loo",
    "inverse_normal_cdf",
    "normal_cdf",
    "ordered_curve",
    "pit_values",
    "threshold_from",
    "to_normal_scale",
]
