from .bounds import VacuousBoundError, theorem4_bound, wald_lower_bound
from .config import ExperimentConfig, config_from_dict, load_config, ring_setup
from .experiment import CSV_HEADER, ExperimentResult, ExperimentRow, run_experiment, write_csv
from .oracle import (
    OracleCapacityError,
    brute_force_optimal_utility,
    check_nonmonotonicity,
    check_superadditivity,
    oracle_optimal_utility,
    utility_curve,
)

__all__ = [
    "CSV_HEADER",
    "ExperimentConfig",
    "ExperimentResult",
    "ExperimentRow",
    "OracleCapacityError",
    "VacuousBoundError",
    "brute_force_optimal_utility",
    "check_nonmonotonicity",
    "check_superadditivity",
    "config_from_dict",
    "load_config",
    "oracle_optimal_utility",
    "ring_setup",
    "run_experiment",
    "theorem4_bound",
    "utility_curve",
    "wald_lower_bound",
    "write_csv",
]
