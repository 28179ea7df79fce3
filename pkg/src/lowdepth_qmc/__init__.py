"""Simulator and resource model for depth-limited quantum Monte Carlo estimation."""

from .estimators import (
    EstimateReport,
    MeasurementRecord,
    Schedule,
    build_exp_schedule,
    build_kp_schedule,
    canonical_qae,
    classical_mc,
    fisher_bound,
    kp_estimate,
    mle_fit,
    mle_qae,
    parallel_split_estimate,
    run_schedule,
)
from .oracle import OracleSpec, amplitude_of, black_scholes_call, discretize_lognormal, european_call
from .qae import NoiseModel, ScheduleEntry, p_one, qpe_distribution, qpe_estimate_map, sample_shots

__version__ = "0.1.0"

__all__ = [
    "EstimateReport", "MeasurementRecord", "NoiseModel", "OracleSpec", "Schedule", "ScheduleEntry",
    "amplitude_of", "black_scholes_call", "build_exp_schedule", "build_kp_schedule", "canonical_qae",
    "classical_mc", "discretize_lognormal", "european_call", "fisher_bound", "kp_estimate", "mle_fit",
    "mle_qae", "p_one", "parallel_split_estimate", "qpe_distribution", "qpe_estimate_map",
    "run_schedule", "sample_shots",
]
