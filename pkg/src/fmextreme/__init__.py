"""Farrington-Manning score test for p1 - p2, including data with proportions of 0 or 1."""

__version__ = "0.1.0"

from .core import (
    FMError,
    InputError,
    InvalidCounts,
    InvalidMargin,
    Margin,
    NumericalError,
    Proportions,
    TrialCounts,
    derive_proportions,
    validate_counts,
)
from .mle import CaseTag, ConstrainedMle, brute_force_mle, constrained_mle
from .inference import TestResult, chi_squared_stat, z_statistic
from .ci import ConfidenceInterval, confidence_interval
from .sim import Alternative, SimConfig, SimResult, simulate

__all__ = [
    "Alternative",
    "CaseTag",
    "ConfidenceInterval",
    "ConstrainedMle",
    "FMError",
    "InputError",
    "InvalidCounts",
    "InvalidMargin",
    "Margin",
    "NumericalError",
    "Proportions",
    "SimConfig",
    "SimResult",
    "TestResult",
    "TrialCounts",
    "brute_force_mle",
    "chi_squared_stat",
    "confidence_interval",
    "constrained_mle",
    "derive_proportions",
    "simulate",
    "validate_counts",
    "z_statistic",
]
