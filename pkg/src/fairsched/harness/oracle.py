"""Exact optimal window utility for deterministic rates.

With rates fixed over time the value of a window depends only on how many
times each user was activated, so a forward dynamic program over count
vectors is exact. One pass up to ``s_max`` yields the optimum for every
window-length at once.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from ..core import InfeasibleError, TemporalDemand, enumerate_virtual_users, to_rational

MAX_ORACLE_USERS = 4
MAX_ORACLE_WINDOW = 64
MAX_ORACLE_STATES = 2_000_000


class OracleCapacityError(RuntimeError):
    """Problem exceeds the oracle's state-space cap."""


def _scaled_rates(rates: Sequence) -> tuple[list[int], int]:
    q = [to_rational(r) for r in rates]
    scale = math.lcm(*(x.denominator for x in q))
    return [int(x * scale) for x in q], scale


def utility_curve(s_max: int, demand: TemporalDemand, n_max: int, rates: Sequence,
                  s_values=None) -> dict[int, Fraction | None]:
    """Optimal utility for each window-length in ``s_values`` (default 1..s_max).

    Infeasible window-lengths map to None.
    """
    n = demand.n
    if n > MAX_ORACLE_USERS or s_max > MAX_ORACLE_WINDOW:
        raise OracleCapacityError(
            f"oracle handles n <= {MAX_ORACLE_USERS}, s <= {MAX_ORACLE_WINDOW}; got n={n}, s={s_max}"
        )
    catalog = enumerate_virtual_users(n, n_max)
    if len(rates) != catalog.m:
        raise ValueError(f"need {catalog.m} rates, got {len(rates)}")
    dims = tuple(min(demand.max_counts(s_max)[i], s_max) + 1 for i in range(n))
    if math.prod(dims) > MAX_ORACLE_STATES:
        raise OracleCapacityError(f"{math.prod(dims)} count states exceed the cap of {MAX_ORACLE_STATES}")
    s_values = sorted(set(range(1, s_max + 1) if s_values is None else s_values))

    r_int, scale = _scaled_rates(rates)
    big = max((abs(r) for r in r_int), default=0) * s_max
    dtype = np.int64 if big < 2**60 else object
    neg = -(2**62) if dtype is np.int64 else None

    value = np.full(dims, neg, dtype=dtype)
    value[(0,) * n] = 0
    B = catalog.membership
    out: dict[int, Fraction | None] = {}
    for t in range(1, s_max + 1):
        nxt = np.full(dims, neg, dtype=dtype)
        for j in range(catalog.m):
            src = tuple(slice(0, d - b) for d, b in zip(dims, B[j]))
            dst = tuple(slice(b, d) for d, b in zip(dims, B[j]))
            block = value[src]
            if dtype is np.int64:
                cand = np.where(block > neg // 2, block + r_int[j], neg)
                np.maximum(nxt[dst], cand, out=nxt[dst])
            else:
                cand = np.where(block != None, block + r_int[j], None)  # noqa: E711
                cur = nxt[dst]
                take = (cand != None) & ((cur == None) | (cand > cur))  # noqa: E711
                cur[take] = cand[take]
                nxt[dst] = cur
        value = nxt
        if t in s_values:
            lo, hi = demand.min_counts(t), demand.max_counts(t)
            if any(a > b or a >= d for a, b, d in zip(lo, hi, dims)):
                out[t] = None
                continue
            box = value[tuple(slice(a, min(b, d - 1) + 1) for a, b, d in zip(lo, hi, dims))]
            if dtype is np.int64:
                best = int(box.max()) if box.size else neg
                out[t] = Fraction(best, t * scale) if box.size and best > neg // 2 else None
            else:
                vals = [v for v in box.ravel() if v is not None]
                out[t] = Fraction(max(vals), t * scale) if vals else None
    return out


def oracle_optimal_utility(s: int, demand: TemporalDemand, n_max: int, rates: Sequence) -> Fraction:
    """Exact optimum of the average window utility under the demands."""
    u = utility_curve(s, demand, n_max, rates, s_values=[s])[s]
    if u is None:
        raise InfeasibleError(f"window-length {s} is infeasible")
    return u


def brute_force_optimal_utility(s: int, demand: TemporalDemand, n_max: int, rates: Sequence) -> Fraction | None:
    """Enumerate all m**s schedules. Only for tiny problems."""
    catalog = enumerate_virtual_users(demand.n, n_max)
    q = [to_rational(r) for r in rates]
    lo, hi = demand.min_counts(s), demand.max_counts(s)
    best = None
    for seq in product(range(catalog.m), repeat=s):
        c = [0] * demand.n
        for j in seq:
            for i in catalog[j]:
                c[i] += 1
        if all(a <= x <= b for a, x, b in zip(lo, c, hi)):
            val = sum(q[j] for j in seq)
            best = val if best is None or val > best else best
    return None if best is None else best / s


def check_superadditivity(s_max: int, demand: TemporalDemand, n_max: int, rates: Sequence):
    """Pairs (s, s') with s*U_s + s'*U_s' > (s+s')*U_{s+s'}; expected empty."""
    curve = utility_curve(2 * s_max, demand, n_max, rates)
    bad = []
    for s in range(1, s_max + 1):
        for s2 in range(s, s_max + 1):
            a, b, c = curve[s], curve[s2], curve[s + s2]
            if a is None or b is None or c is None:
                continue
            if s * a + s2 * b > (s + s2) * c:
                bad.append((s, s2, s * a + s2 * b, (s + s2) * c))
    return bad


def check_nonmonotonicity(s_values, demand: TemporalDemand, n_max: int, rates: Sequence) -> list[tuple[int, int]]:
    """``(s, sign(U_{s+1} - U_s))`` for each s where both windows are feasible."""
    s_values = sorted(s_values)
    curve = utility_curve(max(s_values) + 1, demand, n_max, rates)
    out = []
    for s in s_values:
        a, b = curve.get(s), curve.get(s + 1)
        if a is None or b is None:
            continue
        out.append((s, (b > a) - (b < a)))
    return out
