"""Finite-window lower bounds on the ATBS utility."""

from __future__ import annotations

from typing import Sequence

import numpy as np


class VacuousBoundError(ValueError):
    """The typical-set bound is undefined for a non-positive margin."""


def theorem4_bound(m: int, s: int, epsilon: float) -> float:
    """``max(0, 1 - m / (4 s eps^2))``: lower bound on U_ATBS(s) / U_TBS."""
    if s < 1:
        raise ValueError("s must be positive")
    if not epsilon > 0:
        raise VacuousBoundError(f"epsilon={epsilon} gives no bound")
    return max(0.0, 1.0 - m / (4.0 * s * epsilon**2))


def wald_lower_bound(stop_times: Sequence[int], s: int, u_star: float) -> float:
    """``E(A) / s * u_star`` from the observed ATBS stopping times."""
    a = np.asarray(stop_times, dtype=float)
    if a.size == 0:
        raise ValueError("no runs to average")
    if np.any(a < 0) or np.any(a > s):
        raise ValueError("stopping times must lie in [0, s]")
    return float(a.mean()) / s * u_star
