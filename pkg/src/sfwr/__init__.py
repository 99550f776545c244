"""Stepped-frequency waveform reflectometry toolkit.

Simulates sinusoidal-burst reflectometry on lossy coaxial lines with exactly
known parameters, estimates the line frequency response from the bursts via
modified least-squares sine fitting, and locates and characterizes cable
faults from the estimate.
"""

__version__ = "0.1.0"

from sfwr.line import (
    FrfSamples,
    Reflector,
    RlgcProfile,
    SecondaryParams,
    default_profile,
    frf,
    frf_response,
    primary_params,
    propagation,
    reflection_coefficient,
)
from sfwr.waveform import BurstPair, SfwrPlan, design_plan, generate, segment
from sfwr.channel import FirstOrderLp, NoiseSpec, first_order_burst_response, reflect
from sfwr.estimator import (
    FrfEstimate,
    FrfRecord,
    SineFitResult,
    estimate_all,
    estimate_frf,
    fit_modified_sine,
    fit_plain_sine,
    raw_delay,
)
from sfwr.fault import (
    FaultReport,
    PropagationTable,
    characterize_reference,
    error_bound,
    locate_constant_gamma,
    locate_generic,
)

__all__ = [
    "BurstPair",
    "FaultReport",
    "FirstOrderLp",
    "FrfEstimate",
    "FrfRecord",
    "FrfSamples",
    "NoiseSpec",
    "PropagationTable",
    "Reflector",
    "RlgcProfile",
    "SecondaryParams",
    "SfwrPlan",
    "SineFitResult",
    "characterize_reference",
    "default_profile",
    "design_plan",
    "error_bound",
    "estimate_all",
    "estimate_frf",
    "first_order_burst_response",
    "fit_modified_sine",
    "fit_plain_sine",
    "frf",
    "frf_response",
    "generate",
    "locate_constant_gamma",
    "locate_generic",
    "primary_params",
    "propagation",
    "raw_delay",
    "reflect",
    "reflection_coefficient",
    "segment",
]
