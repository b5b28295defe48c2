"""Independent brute-force oracles shared by the tests."""

from fractions import Fraction
from itertools import product

import numpy as np

from fairsched.core import ScheduleTrace, check_fairness, enumerate_virtual_users


def all_schedule_counts(n: int, n_max: int, s: int, chunk: int = 1 << 20) -> np.ndarray:
    """Distinct per-user count vectors over all m**s schedules, by enumeration."""
    cat = enumerate_virtual_users(n, n_max)
    B = cat.membership.astype(np.int16)
    m = cat.m
    total = m**s
    seen = set()
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        counts = np.zeros((idx.size, n), dtype=np.int16)
        rest = idx.copy()
        for _ in range(s):
            counts += B[rest % m]
            rest //= m
        seen.update(map(tuple, np.unique(counts, axis=0).tolist()))
    return np.array(sorted(seen), dtype=np.int64).reshape(-1, n)


def fair_by_counts(counts: np.ndarray, s: int, lower, upper) -> np.ndarray:
    """Rows of ``counts`` with lower <= c/s <= upper, by cross-multiplication."""
    ok = np.ones(len(counts), dtype=bool)
    for i, (lo, hi) in enumerate(zip(lower, upper)):
        lo, hi = Fraction(lo), Fraction(hi)
        c = counts[:, i]
        ok &= c * lo.denominator >= lo.numerator * s
        ok &= c * hi.denominator <= hi.numerator * s
    return ok


def exhaustive_fair_schedules(s, demand, catalog):
    """Every fair schedule of length ``s``, via check_fairness on each trace."""
    for seq in product(range(catalog.m), repeat=s):
        if check_fairness(ScheduleTrace(list(seq), [0] * s), catalog, demand):
            yield seq
