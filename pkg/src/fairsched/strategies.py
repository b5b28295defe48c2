"""Ordered round robin, threshold-based (TBS) and augmented TBS schedulers.

ATBS picks, in every slot, the virtual user maximizing

    rate_j + sum(thresholds[i] for i in V_j)

among the virtual users whose activation still leaves the window's
demands satisfiable. Counts are kept as integers throughout so the
admissibility tests are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    InfeasibleError,
    ScheduleTrace,
    TemporalDemand,
    VirtualUserCatalog,
)
from .feasibility import build_orr, inequality_feasible


class InvariantViolation(RuntimeError):
    """An internal guarantee of the ATBS bookkeeping was broken."""


def as_thresholds(thresholds, n: int) -> np.ndarray:
    lam = np.asarray(thresholds, dtype=float).reshape(-1)
    if lam.shape != (n,):
        raise ValueError(f"expected {n} thresholds, got {lam.shape[0]}")
    if not np.all(np.isfinite(lam)):
        raise ValueError("thresholds must be finite")
    return lam


def scheduling_measure(j: int, r_j: float, thresholds, catalog: VirtualUserCatalog) -> float:
    return r_j + sum(float(thresholds[i]) for i in catalog[j])


def measure_offsets(thresholds, catalog: VirtualUserCatalog) -> np.ndarray:
    """Threshold part of the scheduling measure for every virtual user."""
    return catalog.membership @ as_thresholds(thresholds, catalog.n)


def tbs_step(thresholds, performance, catalog: VirtualUserCatalog) -> int:
    """Unconstrained argmax of the scheduling measure; lowest index wins ties."""
    meas = np.asarray(performance, dtype=float) + measure_offsets(thresholds, catalog)
    return int(np.argmax(meas))


@dataclass
class StrategyState:
    """Mutable window state of one ATBS run. ``t`` is the next slot, 1-based."""

    s: int
    demand: TemporalDemand
    catalog: VirtualUserCatalog
    thresholds: np.ndarray
    t: int = 1
    counts: np.ndarray = field(default=None)
    live: np.ndarray = field(default=None)
    initial: np.ndarray | None = None
    stop_time: int | None = None

    def __post_init__(self):
        n = self.catalog.n
        if self.demand.n != n:
            raise ValueError("demand and catalog disagree on the number of users")
        self.thresholds = as_thresholds(self.thresholds, n)
        if self.counts is None:
            self.counts = np.zeros(n, dtype=np.int64)
        if self.live is None:
            self.live = np.ones(self.catalog.m, dtype=bool)
        self.lower_counts = np.array(self.demand.min_counts(self.s), dtype=np.int64)
        self.upper_counts = np.array(self.demand.max_counts(self.s), dtype=np.int64)

    @classmethod
    def start(cls, s: int, demand: TemporalDemand, catalog: VirtualUserCatalog, thresholds=None) -> StrategyState:
        if thresholds is None:
            thresholds = np.zeros(catalog.n)
        return cls(s=s, demand=demand, catalog=catalog, thresholds=thresholds)


def admissible(j: int, state: StrategyState) -> bool:
    """Scalar form of the three admissibility inequalities for slot ``state.t``."""
    s, t, n_max = state.s, state.t, state.catalog.n_max
    members = state.catalog[j]
    rem = s - t
    worst = None
    total = 0
    for i in range(state.catalog.n):
        hit = 1 if i in members else 0
        c = int(state.counts[i])
        need = int(state.lower_counts[i]) - c - hit
        worst = need if worst is None else max(worst, need)
        total += max(need, 0)
        if int(state.upper_counts[i]) < c + hit:
            return False
    return rem >= worst and rem * n_max >= total


def admissible_mask(state: StrategyState) -> np.ndarray:
    """Vectorized ``admissible`` over the whole catalog."""
    B = state.catalog.membership
    rem = state.s - state.t
    c = state.counts
    deficit = state.lower_counts - c
    # Cheap sufficient condition: nothing can bind yet.
    if (
        deficit.max() <= rem
        and np.maximum(deficit, 0).sum() <= rem * state.catalog.n_max
        and (state.upper_counts - c).min() >= 1
    ):
        return np.ones(state.catalog.m, dtype=bool)
    D = deficit[None, :] - B
    eq5 = D.max(axis=1) <= rem
    eq6 = ((c[None, :] + B) <= state.upper_counts[None, :]).all(axis=1)
    eq7 = np.maximum(D, 0).sum(axis=1) <= rem * state.catalog.n_max
    return eq5 & eq6 & eq7


def refine_live_set(state: StrategyState) -> np.ndarray:
    """Shrink the live set for slot ``state.t`` and return it.

    Raises InvariantViolation if a previously excluded virtual user would
    pass again, or if nothing is left.
    """
    adm = admissible_mask(state)
    if state.t > 1 and np.any(adm & ~state.live):
        raise InvariantViolation(f"slot {state.t}: excluded virtual user became admissible again")
    live = state.live & adm
    if state.t == 1:
        state.initial = live.copy()
    elif state.stop_time is None and not np.array_equal(live, state.initial):
        # Slots 1..t-1 were scheduled from the unrestricted set.
        state.stop_time = state.t - 1
    if not live.any():
        raise InvariantViolation(f"slot {state.t}: empty feasible virtual-user set")
    state.live = live
    return live


def record_choice(state: StrategyState, j: int) -> None:
    state.counts += state.catalog.membership[j]
    state.t += 1


def atbs_step(state: StrategyState, performance) -> int:
    """Refine the live set, pick the best live virtual user, advance the state."""
    if state.t > state.s:
        raise InvariantViolation("window already complete")
    live = refine_live_set(state)
    meas = np.asarray(performance, dtype=float) + state.catalog.membership @ state.thresholds
    j = int(np.argmax(np.where(live, meas, -np.inf)))
    record_choice(state, j)
    return j


def orr_step(t: int, sequence: Sequence[int]) -> int:
    """Choice of the ordered round robin at 1-based slot ``t``."""
    if not 1 <= t <= len(sequence):
        raise IndexError(f"ordered round robin exhausted at t={t} (s={len(sequence)})")
    return int(sequence[t - 1])


# Whole-window runners. Each maps an (s, m) performance matrix to choices.

@dataclass
class WindowRun:
    choices: np.ndarray
    realized: np.ndarray
    stop_time: int | None = None

    @property
    def utility(self) -> float:
        return float(self.realized.mean())

    def trace(self) -> ScheduleTrace:
        return ScheduleTrace(self.choices.tolist(), self.realized.tolist())


class ATBS:
    name = "atbs"

    def __init__(self, catalog: VirtualUserCatalog, demand: TemporalDemand, thresholds=None):
        self.catalog = catalog
        self.demand = demand
        self.thresholds = as_thresholds(np.zeros(catalog.n) if thresholds is None else thresholds, catalog.n)

    def run(self, perf: np.ndarray) -> WindowRun:
        s = perf.shape[0]
        state = StrategyState.start(s, self.demand, self.catalog, self.thresholds)
        meas = perf + measure_offsets(self.thresholds, self.catalog)
        choices = np.empty(s, dtype=np.int64)
        for k in range(s):
            live = refine_live_set(state)
            row = meas[k]
            j = int(np.argmax(row)) if live.all() else int(np.argmax(np.where(live, row, -np.inf)))
            choices[k] = j
            record_choice(state, j)
        stop = state.stop_time if state.stop_time is not None else s
        return WindowRun(choices, perf[np.arange(s), choices], stop)


class TBS:
    name = "tbs"

    def __init__(self, catalog: VirtualUserCatalog, thresholds=None):
        self.catalog = catalog
        self.thresholds = as_thresholds(np.zeros(catalog.n) if thresholds is None else thresholds, catalog.n)

    def choose_all(self, perf: np.ndarray) -> np.ndarray:
        return np.argmax(perf + measure_offsets(self.thresholds, self.catalog), axis=1)

    def run(self, perf: np.ndarray) -> WindowRun:
        choices = self.choose_all(perf)
        return WindowRun(choices, perf[np.arange(perf.shape[0]), choices])


class ORR:
    name = "orr"

    def __init__(self, catalog: VirtualUserCatalog, demand: TemporalDemand):
        self.catalog = catalog
        self.demand = demand
        self._cache: dict[int, np.ndarray] = {}

    def sequence(self, s: int) -> np.ndarray:
        if s not in self._cache:
            self._cache[s] = np.array(build_orr(s, self.demand, self.catalog.n_max, self.catalog), dtype=np.int64)
        return self._cache[s]

    def run(self, perf: np.ndarray) -> WindowRun:
        seq = self.sequence(perf.shape[0])
        return WindowRun(seq.copy(), perf[np.arange(len(seq)), seq])


def make_strategy(name: str, catalog: VirtualUserCatalog, demand: TemporalDemand, thresholds=None):
    if name == "atbs":
        return ATBS(catalog, demand, thresholds)
    if name == "tbs":
        return TBS(catalog, thresholds)
    if name == "orr":
        return ORR(catalog, demand)
    raise ValueError(f"unknown strategy {name!r} (expected orr, tbs or atbs)")


def run_window(strategy, s: int, demand: TemporalDemand, sampler, rng: np.random.Generator) -> ScheduleTrace:
    """Draw ``s`` i.i.d. performance vectors and schedule them."""
    if getattr(strategy, "name", None) in ("atbs", "orr"):
        res = inequality_feasible(s, demand, strategy.catalog.n_max)
        if not res.feasible:
            raise InfeasibleError(f"window-length {s} is infeasible: {res.reason}")
    out = strategy.run(sampler.sample(rng, s))
    trace = out.trace()
    trace.stop_time = out.stop_time
    return trace
