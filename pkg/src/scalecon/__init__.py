"""Scale economies, firm selection and aggregate TFP in a Pareto heterogeneous-firm model."""

from .errors import (
    AssumptionViolation,
    CalibrationError,
    DivergentMomentError,
    DomainError,
    HorizonTooShortError,
    InfeasibleEntryCostError,
    MalformedInputError,
    ScaleconError,
    ScenarioError,
    SeriesError,
    SolverError,
)
from .params import ModelParams, derived_constants, kappa_max, load_params, validate
from .steady import SteadyState, solve_closed_form, solve_numeric

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolation",
    "CalibrationError",
    "DivergentMomentError",
    "DomainError",
    "HorizonTooShortError",
    "InfeasibleEntryCostError",
    "MalformedInputError",
    "ModelParams",
    "ScaleconError",
    "ScenarioError",
    "SeriesError",
    "SolverError",
    "SteadyState",
    "derived_constants",
    "kappa_max",
    "load_params",
    "solve_closed_form",
    "solve_numeric",
    "validate",
]
