"""Opportunistic multi-user scheduling under short-term temporal fairness."""

from .core import (
    ConfigurationError,
    InfeasibleError,
    ScheduleTrace,
    ShareVector,
    TemporalDemand,
    VirtualUserCatalog,
    average_utility,
    check_fairness,
    enumerate_virtual_users,
    temporal_share,
)
from .feasibility import (
    build_orr,
    contiguity_threshold,
    d_res,
    equality_feasible,
    inequality_feasible,
    theta_map,
)
from .strategies import ATBS, ORR, TBS, StrategyState, atbs_step, run_window, tbs_step

__version__ = "0.1.0"
