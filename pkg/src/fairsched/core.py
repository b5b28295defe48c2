"""Exact share bookkeeping shared by the rest of the package.

Users are indexed ``0..n-1`` internally. Anything written to disk (CSV,
subset labels) uses 1-based user numbers, e.g. ``"1+3"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Sequence

import numpy as np

# Caps the catalog size; m grows like n^n_max.
MAX_USERS = 20


class ConfigurationError(ValueError):
    """Invalid system configuration (n, n_max, demands, config keys)."""


class InfeasibleError(ValueError):
    """A window-length or share vector cannot be realized."""


def to_rational(x) -> Fraction:
    """Exact conversion; strings like ``"1/5"`` and ``"0.2"`` both give 1/5."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # Decimal-looking floats (0.2) should mean what they print as.
        return Fraction(repr(x))
    return Fraction(x)


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str) -> Fraction:
    return Fraction(text.strip())


@dataclass(frozen=True)
class VirtualUserCatalog:
    """Ordered family of user subsets that may be active in one slot."""

    n: int
    n_max: int
    subsets: tuple[frozenset[int], ...]

    @property
    def m(self) -> int:
        return len(self.subsets)

    def __len__(self) -> int:
        return len(self.subsets)

    def __getitem__(self, j: int) -> frozenset[int]:
        return self.subsets[j]

    def index(self, subset) -> int:
        return self.subsets.index(frozenset(subset))

    @cached_property
    def membership(self) -> np.ndarray:
        """(m, n) 0/1 integer matrix, row j flags the members of V_j."""
        B = np.zeros((self.m, self.n), dtype=np.int64)
        for j, sub in enumerate(self.subsets):
            B[j, sorted(sub)] = 1
        B.setflags(write=False)
        return B

    @cached_property
    def sizes(self) -> np.ndarray:
        return self.membership.sum(axis=1)

    def label(self, j: int) -> str:
        sub = self.subsets[j]
        return "+".join(str(i + 1) for i in sorted(sub)) if sub else "-"


def enumerate_virtual_users(n: int, n_max: int) -> VirtualUserCatalog:
    """All subsets of ``range(n)`` with at most ``n_max`` members.

    Ordered by size, then lexicographically on the sorted members, so the
    empty set is always index 0.
    """
    if not (1 <= n_max <= n):
        raise ConfigurationError(f"need 1 <= n_max <= n, got n={n}, n_max={n_max}")
    if n > MAX_USERS:
        raise ConfigurationError(f"n={n} exceeds the cap of {MAX_USERS} users")
    subsets = tuple(
        frozenset(c) for k in range(n_max + 1) for c in combinations(range(n), k)
    )
    return VirtualUserCatalog(n=n, n_max=n_max, subsets=subsets)


@dataclass(frozen=True)
class TemporalDemand:
    """Per-user lower and upper bounds on the final temporal share."""

    lower: tuple[Fraction, ...]
    upper: tuple[Fraction, ...]

    def __post_init__(self):
        lower = tuple(to_rational(x) for x in self.lower)
        upper = tuple(to_rational(x) for x in self.upper)
        if len(lower) != len(upper) or not lower:
            raise ConfigurationError("lower and upper demand vectors must be non-empty and equal length")
        for i, (lo, hi) in enumerate(zip(lower, upper)):
            if not (0 <= lo <= hi <= 1):
                raise ConfigurationError(
                    f"user {i + 1}: need 0 <= lower <= upper <= 1, got {lo}, {hi}"
                )
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform(cls, n: int, lower, upper) -> TemporalDemand:
        return cls((lower,) * n, (upper,) * n)

    @classmethod
    def equality(cls, w: Sequence) -> TemporalDemand:
        return cls(tuple(w), tuple(w))

    @property
    def n(self) -> int:
        return len(self.lower)

    def min_counts(self, s: int) -> list[int]:
        """ceil(s * lower_i): the fewest activations user i can end with."""
        return [math.ceil(s * lo) for lo in self.lower]

    def max_counts(self, s: int) -> list[int]:
        """floor(s * upper_i), never above s."""
        return [min(math.floor(s * hi), s) for hi in self.upper]


@dataclass
class ShareVector:
    """Running activation counts; shares are ``counts[i] / t``."""

    counts: list[int]
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> ShareVector:
        return cls([0] * n, 0)

    def record(self, subset) -> None:
        for i in subset:
            self.counts[i] += 1
        self.t += 1

    def share(self, i: int) -> Fraction:
        if self.t < 1:
            raise ValueError("temporal share is undefined before the first slot")
        return Fraction(self.counts[i], self.t)


@dataclass
class ScheduleTrace:
    """Chosen catalog indices and the performance realized in each slot."""

    choices: list[int] = field(default_factory=list)
    realized: list[float] = field(default_factory=list)
    # ATBS only: leading slots scheduled before the feasible set first shrank
    # below its slot-1 value (s if it never did).
    stop_time: int | None = None

    @property
    def s(self) -> int:
        return len(self.choices)

    def append(self, j: int, r) -> None:
        self.choices.append(int(j))
        self.realized.append(r)

    def validate(self, catalog: VirtualUserCatalog) -> None:
        if len(self.choices) != len(self.realized):
            raise ValueError("choices and realized must have equal length")
        for j in self.choices:
            if not 0 <= j < catalog.m:
                raise ValueError(f"choice {j} outside catalog of size {catalog.m}")

    def counts(self, catalog: VirtualUserCatalog, t: int | None = None) -> list[int]:
        t = self.s if t is None else t
        c = [0] * catalog.n
        for j in self.choices[:t]:
            for i in catalog[j]:
                c[i] += 1
        return c


def temporal_share(trace: ScheduleTrace, catalog: VirtualUserCatalog, i: int, t: int) -> Fraction:
    """Fraction of the first ``t`` slots in which user ``i`` was active."""
    if t < 1:
        raise ValueError("temporal share is undefined for t = 0")
    if t > trace.s:
        raise ValueError(f"t={t} exceeds trace length {trace.s}")
    if not 0 <= i < catalog.n:
        raise IndexError(f"user index {i} out of range")
    hits = sum(1 for j in trace.choices[:t] if i in catalog[j])
    return Fraction(hits, t)


@dataclass(frozen=True)
class FairnessReport:
    ok: bool
    shares: tuple[Fraction, ...]
    violations: tuple[tuple[int, Fraction], ...]

    def __bool__(self) -> bool:
        return self.ok


def check_fairness(trace: ScheduleTrace, catalog: VirtualUserCatalog, demand: TemporalDemand) -> FairnessReport:
    """Exact check of lower <= share <= upper for every user at t = s."""
    s = trace.s
    if s < 1:
        raise ValueError("cannot check fairness on an empty trace")
    counts = trace.counts(catalog)
    shares = tuple(Fraction(c, s) for c in counts)
    bad = tuple(
        (i, a)
        for i, (a, lo, hi) in enumerate(zip(shares, demand.lower, demand.upper))
        if not lo <= a <= hi
    )
    return FairnessReport(ok=not bad, shares=shares, violations=bad)


def average_utility(trace: ScheduleTrace, t: int | None = None):
    """Mean realized performance over the first ``t`` slots.

    Returns a Fraction when every realized value is rational, else a float.
    """
    t = trace.s if t is None else t
    if t < 1:
        raise ValueError("average utility is undefined for t = 0")
    if t > trace.s:
        raise ValueError(f"t={t} exceeds trace length {trace.s}")
    vals = trace.realized[:t]
    if all(isinstance(v, (int, Fraction)) for v in vals):
        return Fraction(sum(vals), t)
    return math.fsum(float(v) for v in vals) / t
