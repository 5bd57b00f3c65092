"""Grenander-type estimators and Monte Carlo checks of their supremum-distance rates."""

from .errors import DomainError, FitError, InputError, ModelError
from .hull import (
    CadlagStep,
    PolylineEnvelope,
    evaluate_envelope,
    left_slope,
    lower_convex_minorant,
    sup_gap,
    upper_concave_majorant,
    windowed_majorant,
)
from .monotone import (
    BIWEIGHT,
    BandwidthRule,
    KernelSpec,
    MonotoneStepFn,
    grenander,
    grenander_decompose,
    pava_decreasing,
    smoothed_grenander,
)
from .naive import empirical_cdf, nelson_aalen, primitive_process, regression_cusum
from .ratelab import ExperimentPlan, ModelSpec, default_model, fit_log_rate, run_experiment

__version__ = "0.1.0"
