"""Simulated dynamical-decoupling Hamiltonian tomography for small spin networks."""

from .errors import (
    FitFailure,
    HamiltonianParseError,
    HamiltonianValidationError,
    InsufficientDataError,
    ResourceLimitError,
    ScheduleMismatchError,
)
from .estimation import EstimationReport, ParamEstimate, fit_local_field, fit_sine
from .evolution import Propagator, product_state, reduced_density, run_schedule
from .experiment import ExperimentConfig, TomographyExperiment, run_full_scan
from .measurement import MeasSetting, ShotRecord
from .pulses import AxisVariant, PulseErrorModel, PulseSchedule, pair_sequence
from .spin_system import SpinSystem, random_instance

__all__ = [
    "AxisVariant", "EstimationReport", "ExperimentConfig", "FitFailure", "HamiltonianParseError",
    "HamiltonianValidationError", "InsufficientDataError", "MeasSetting", "ParamEstimate",
    "Propagator", "PulseErrorModel", "PulseSchedule", "ResourceLimitError", "ScheduleMismatchError",
    "ShotRecord", "SpinSystem", "TomographyExperiment", "fit_local_field", "fit_sine",
    "pair_sequence", "product_state", "random_instance", "reduced_density", "run_full_scan",
    "run_schedule",
]
