"""Which window-lengths admit a fair schedule, and how to build one.

Everything here is integer/rational arithmetic. A window of ``s`` slots is
feasible exactly when per-user activation counts ``c_i`` exist with
``ceil(s*lower_i) <= c_i <= min(floor(s*upper_i), s)`` and
``sum(c) <= s*n_max``; wrap-around packing then turns any such count
vector into a concrete schedule.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import (
    ConfigurationError,
    InfeasibleError,
    TemporalDemand,
    VirtualUserCatalog,
    enumerate_virtual_users,
    to_rational,
)


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    s: int
    witness_counts: tuple[int, ...] | None = None
    reason: str = ""

    @property
    def witness_shares(self) -> tuple[Fraction, ...] | None:
        if self.witness_counts is None:
            return None
        return tuple(Fraction(c, self.s) for c in self.witness_counts)

    def __bool__(self) -> bool:
        return self.feasible


@dataclass(frozen=True)
class VirtualShareVector:
    """Per-virtual-user activation fractions ``a_j``; ``s * a_j`` are integers."""

    shares: tuple[Fraction, ...]
    s: int

    @property
    def slots(self) -> tuple[int, ...]:
        return tuple(int(a * self.s) for a in self.shares)


def d_res(w: Sequence) -> int:
    """lcm of the reduced denominators of ``w``."""
    w = [to_rational(x) for x in w]
    if not w:
        raise ValueError("d_res of an empty share vector")
    return math.lcm(*(x.denominator for x in w))


def equality_feasible(s: int, w: Sequence, n_max: int) -> bool:
    """Feasibility of ``share_i == w_i`` exactly over ``s`` slots."""
    w = [to_rational(x) for x in w]
    if any(not 0 <= x <= 1 for x in w):
        raise ConfigurationError("shares must lie in [0, 1]")
    if sum(w) > n_max:
        raise InfeasibleError(
            f"sum of shares {sum(w)} exceeds n_max={n_max}; no window-length works"
        )
    if s < 1:
        raise ValueError("window-length must be positive")
    return s % d_res(w) == 0


def inequality_feasible(s: int, demand: TemporalDemand, n_max: int) -> FeasibilityResult:
    """Decide feasibility of window ``s``; the witness uses minimal counts."""
    if s < 1:
        raise ValueError("window-length must be positive")
    lo = demand.min_counts(s)
    hi = demand.max_counts(s)
    for i, (a, b) in enumerate(zip(lo, hi)):
        if a > b:
            return FeasibilityResult(
                False, s, reason=f"user {i + 1}: needs {a} slots but may take at most {b}"
            )
    if sum(lo) > s * n_max:
        return FeasibilityResult(
            False, s, reason=f"lower demands need {sum(lo)} activations, only {s * n_max} available"
        )
    return FeasibilityResult(True, s, tuple(lo))


def feasible_window_lengths(demand: TemporalDemand, n_max: int, s_values) -> list[int]:
    return [s for s in s_values if inequality_feasible(s, demand, n_max).feasible]


def contiguity_threshold(demand: TemporalDemand, n_max: int) -> int:
    """Window-length beyond which every ``s`` is feasible.

    Returns ``d_res(lower) + n * max(d_alpha, d_delta)`` where ``d_alpha`` is
    the denominator of the spare capacity ``n_max - sum(lower)`` and
    ``d_delta`` that of the narrowest band ``min(upper - lower)``.
    """
    lower, upper = demand.lower, demand.upper
    n = demand.n
    gaps = [u - l for l, u in zip(lower, upper)]
    slack = n_max - sum(lower)
    if min(gaps) <= 0 or slack <= 0:
        raise ConfigurationError(
            "contiguity threshold needs strict bands and spare capacity; "
            "use equality_feasible for pinned shares"
        )
    d_eps = max(slack.denominator, min(gaps).denominator)
    return d_res(lower) + n * d_eps


def wrap_around_columns(counts: Sequence[int], s: int, n_max: int) -> list[frozenset[int]]:
    """Pack ``counts[i]`` tokens per user onto an ``n_max x s`` tape.

    Tokens are laid user after user in row-major order, wrapping from the
    end of one row to the start of the next. Column ``k`` is the set of
    users active in slot ``k``. Because ``counts[i] <= s`` a user never
    lands twice in one column.
    """
    if any(c < 0 or c > s for c in counts):
        raise InfeasibleError("each count must lie in [0, s]")
    if sum(counts) > s * n_max:
        raise InfeasibleError(f"{sum(counts)} tokens do not fit in {n_max} x {s} slots")
    columns: list[set[int]] = [set() for _ in range(s)]
    pos = 0
    for i, c in enumerate(counts):
        for p in range(pos, pos + c):
            columns[p % s].add(i)
        pos += c
    return [frozenset(col) for col in columns]


def theta_map(s: int, w: Sequence, catalog: VirtualUserCatalog) -> VirtualShareVector:
    """Per-user shares to per-virtual-user shares (canonical wrap-around choice)."""
    w = [to_rational(x) for x in w]
    if len(w) != catalog.n:
        raise ValueError("share vector length does not match the catalog")
    scaled = [x * s for x in w]
    if any(x.denominator != 1 for x in scaled):
        raise InfeasibleError(f"s={s} does not make every s*w_i an integer")
    if sum(w) > catalog.n_max or any(not 0 <= x <= 1 for x in w):
        raise InfeasibleError("shares violate 0 <= w_i <= 1 or sum(w) <= n_max")
    columns = wrap_around_columns([int(x) for x in scaled], s, catalog.n_max)
    tally = Counter(catalog.index(col) for col in columns)
    return VirtualShareVector(tuple(Fraction(tally.get(j, 0), s) for j in range(catalog.m)), s)


def orr_sequence(shares: VirtualShareVector) -> list[int]:
    """Blocks of ``s * a_j`` consecutive slots per virtual user, in catalog order."""
    seq: list[int] = []
    for j, l in enumerate(shares.slots):
        seq.extend([j] * l)
    return seq


def build_orr(s: int, demand: TemporalDemand, n_max: int,
              catalog: VirtualUserCatalog | None = None) -> list[int]:
    """Ordered round robin choice sequence for a feasible window."""
    catalog = catalog or enumerate_virtual_users(demand.n, n_max)
    res = inequality_feasible(s, demand, n_max)
    if not res.feasible:
        raise InfeasibleError(f"window-length {s} is infeasible: {res.reason}")
    seq = orr_sequence(theta_map(s, res.witness_shares, catalog))
    assert len(seq) == s
    return seq
