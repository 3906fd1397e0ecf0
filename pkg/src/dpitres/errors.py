"""Exception hierarchy shared by the library and the command-line front end."""

from __future__ import annotations


class DpitError(Exception):
    """Base class for every error raised by :mod:`dpitres`."""


class ParameterDomainError(DpitError, ValueError):
    """A distribution parameter or argument lies outside its domain."""


class InsufficientDataError(DpitError, ValueError):
    """Too few observations for the requested computation."""


class DegenerateDataError(DpitError, ValueError):
    """The data make a quantity undefined (zero denominators, zero variance)."""


class UnsupportedOperationError(DpitError, TypeError):
    """The operation is not defined for the given family."""


class NumericalError(DpitError, ArithmeticError):
    """A computed quantity violated a numerical sanity bound."""


class ParseError(DpitError, ValueError):
    """Malformed input file or configuration."""


class FitError(DpitError, RuntimeError):
    """Base class for model fitting failures."""


class ConvergenceError(FitError):
    """The optimizer did not reach the gradient tolerance.

    Attributes
    ----------
    last_iterate : numpy.ndarray
        Parameter vector at exit.
    grad_norm : float
        Gradient norm at exit.
    """

    def __init__(self, message, last_iterate=None, grad_norm=float("nan")):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.grad_norm = grad_norm


class SeparationError(FitError):
    """Complete or quasi-complete separation in a binary fit."""


class ScenarioError(DpitError, RuntimeError):
    """Too many replicates of a simulation scenario failed."""
