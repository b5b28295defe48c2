import math
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, strategies as st

from fairsched.core import (
    ConfigurationError,
    ScheduleTrace,
    ShareVector,
    TemporalDemand,
    average_utility,
    check_fairness,
    enumerate_virtual_users,
    format_rational,
    parse_rational,
    temporal_share,
    to_rational,
)


def trace_of(choices, realized=None):
    return ScheduleTrace(list(choices), list(realized if realized is not None else [0] * len(choices)))


class TestCatalog:
    def test_five_user_size(self):
        assert enumerate_virtual_users(5, 2).m == 16

    def test_two_users_one_active(self):
        cat = enumerate_virtual_users(2, 1)
        assert cat.subsets == (frozenset(), frozenset({0}), frozenset({1}))

    def test_full_power_set(self):
        assert enumerate_virtual_users(3, 3).m == 8

    def test_order_size_then_lex(self):
        cat = enumerate_virtual_users(4, 2)
        keys = [(len(v), sorted(v)) for v in cat.subsets]
        assert keys == sorted(keys)
        assert cat[0] == frozenset()

    @pytest.mark.parametrize("n,n_max", [(2, 3), (3, 0), (21, 1)])
    def test_bad_sizes(self, n, n_max):
        with pytest.raises(ConfigurationError):
            enumerate_virtual_users(n, n_max)

    @given(st.integers(1, 10).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n))))
    def test_size_is_binomial_sum(self, nn):
        n, n_max = nn
        cat = enumerate_virtual_users(n, n_max)
        assert cat.m == sum(comb(n, k) for k in range(n_max + 1))
        assert (cat.membership.sum(axis=1) <= n_max).all()

    def test_labels_are_one_based(self):
        cat = enumerate_virtual_users(3, 2)
        assert cat.label(0) == "-"
        assert cat.label(cat.index({0, 2})) == "1+3"


class TestShares:
    def test_half(self):
        cat = enumerate_virtual_users(2, 1)
        tr = trace_of([1, 2, 1, 0])
        assert temporal_share(tr, cat, 0, 4) == Fraction(1, 2)

    def test_never_active(self):
        cat = enumerate_virtual_users(2, 1)
        tr = trace_of([1] * 7)
        assert temporal_share(tr, cat, 1, 7) == 0

    def test_two_user_trace(self, toy):
        cat, _, _ = toy
        tr = trace_of([2, 2, 2, 1])
        assert temporal_share(tr, cat, 0, 4) == Fraction(1, 4)

    def test_t_zero(self):
        cat = enumerate_virtual_users(2, 1)
        with pytest.raises(ValueError):
            temporal_share(trace_of([1]), cat, 0, 0)
        with pytest.raises(ValueError):
            ShareVector.zeros(2).share(0)

    @given(st.lists(st.integers(0, 15), min_size=1, max_size=60))
    def test_incremental_matches_recount(self, choices):
        cat = enumerate_virtual_users(5, 2)
        tr = trace_of(choices)
        sv = ShareVector.zeros(5)
        for t, j in enumerate(choices, start=1):
            sv.record(cat[j])
            for i in range(5):
                assert sv.share(i) == temporal_share(tr, cat, i, t)
        assert sum(tr.counts(cat)) == sum(len(cat[j]) for j in choices) <= len(choices) * cat.n_max


class TestFairness:
    def test_two_user_trace_fair(self, toy):
        cat, dem, _ = toy
        assert check_fairness(trace_of([2, 2, 2, 1]), cat, dem)

    def test_missing_user(self, toy):
        cat, dem, _ = toy
        rep = check_fairness(trace_of([2, 2, 2, 2]), cat, dem)
        assert not rep
        assert rep.violations[0] == (0, 0)

    def test_alternating(self, toy):
        cat, dem, _ = toy
        rep = check_fairness(trace_of([1, 2]), cat, dem)
        assert rep and rep.shares == (Fraction(1, 2), Fraction(1, 2))


class TestUtility:
    def test_mean(self):
        assert average_utility(trace_of([1, 1, 1], [1, 2, 3])) == 2

    def test_two_user(self):
        assert average_utility(trace_of([2, 2, 2, 1], [2, 2, 2, 1])) == Fraction(7, 4)

    def test_zero(self):
        assert average_utility(trace_of([0, 0], [0, 0])) == 0

    def test_float_values(self):
        assert average_utility(trace_of([1, 1], [0.5, 1.5])) == pytest.approx(1.0)

    def test_t_zero(self):
        with pytest.raises(ValueError):
            average_utility(trace_of([1], [1]), 0)


class TestRationals:
    def test_decimal_strings(self):
        assert to_rational("0.2") == to_rational(0.2) == to_rational("1/5") == Fraction(1, 5)

    @given(st.integers(-10**6, 10**6), st.integers(1, 10**6))
    def test_round_trip(self, p, q):
        x = Fraction(p, q)
        assert parse_rational(format_rational(x)) == x

    @given(st.integers(-10**6, 10**6), st.integers(1, 10**6))
    def test_floor_ceil(self, p, q):
        x = Fraction(p, q)
        f, c = math.floor(x), math.ceil(x)
        # brute force: the integers bracketing p/q, compared in integer arithmetic
        assert f * q <= p < (f + 1) * q
        assert (c - 1) * q < p <= c * q

    @given(st.lists(st.integers(1, 60), min_size=1, max_size=3))
    def test_lcm(self, dens):
        step = max(dens)
        k = step
        while any(k % d for d in dens):
            k += step
        assert math.lcm(*dens) == k

    def test_demand_validation(self):
        with pytest.raises(ConfigurationError):
            TemporalDemand((Fraction(1, 2),), (Fraction(1, 3),))
        with pytest.raises(ConfigurationError):
            TemporalDemand((), ())
        d = TemporalDemand.uniform(3, 0.2, 1)
        assert d.lower == (Fraction(1, 5),) * 3
        assert d.min_counts(7) == [2, 2, 2]
        assert d.max_counts(7) == [7, 7, 7]
