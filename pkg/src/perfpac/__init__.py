"""Performative PAC learning lab: linear posterior drift, the performative
empirical risk (PER) and its surrogate, bounds, and repeated ERM dynamics."""
from .core import (
    IDENTITY,
    DriftFamily,
    DriftParams,
    IntervalParams,
    PerCoefficients,
    coefficients,
    family_params,
    interval_coefficients,
)
from .risk import exact_pr, per, surrogate
from .shiftsim import drifted_prob, resample_labels

__version__ = "0.1.0"

__all__ = [
    "IDENTITY", "DriftFamily", "DriftParams", "IntervalParams", "PerCoefficients",
    "coefficients", "family_params", "interval_coefficients",
    "exact_pr", "per", "surrogate", "drifted_prob", "resample_labels",
]
