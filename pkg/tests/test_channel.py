import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fairsched.channel import (
    CellConfig,
    CellSampler,
    FixedSampler,
    db_to_linear,
    drop_users,
    mean_snr_db,
    pair_sum_rate,
    rng_stream,
    sample_performance,
    superposition_common_rate,
    symmetric_tdma_rate,
    synthetic_sampler,
    truncated_shannon_rate,
)
from fairsched.core import ConfigurationError, enumerate_virtual_users

CFG = CellConfig()
CAT = enumerate_virtual_users(5, 2)


def closed_form_common_rate(ga, gb, cfg):
    """Equal-SINR superposition point from the quadratic, then truncated."""
    gs, gw = max(ga, gb), min(ga, gb)
    x = (-(gw + gs) + math.sqrt((gw + gs) ** 2 + 4 * gw * gw * gs)) / (2 * gw)
    raw = cfg.bandwidth_efficiency * math.log2(1 + x)
    floor = cfg.bandwidth_efficiency * math.log2(1 + 10 ** (cfg.shannon_min_snr / 10))
    return raw, (0.0 if raw < floor else min(raw, cfg.shannon_max_rate))


class TestDrop:
    def test_in_annulus_and_reproducible(self):
        a = drop_users(CFG, 11)
        b = drop_users(CFG, 11)
        assert a == b
        assert all(20 <= u.distance <= 100 for u in a)

    def test_area_uniform(self):
        cfg = CellConfig(n_users=200_000 // 10)
        r = np.array([u.distance for u in drop_users(cfg, 5)])
        # r^2 is uniform on [r_in^2, r_out^2]
        u = (r**2 - 20**2) / (100**2 - 20**2)
        assert abs(u.mean() - 0.5) < 0.01
        assert abs(np.mean(u < 0.25) - 0.25) < 0.01

    def test_snr_decreases_with_distance(self):
        cfg = CellConfig(shadowing_sigma=0.0, n_users=50)
        users = sorted(drop_users(cfg, 1), key=lambda u: u.distance)
        snr = [u.mean_snr_db for u in users]
        assert all(x > y for x, y in zip(snr, snr[1:]))

    def test_link_budget(self):
        # 30 dBm - (38 + 30 log10 100) + 94 dB
        assert mean_snr_db(100.0, 0.0, CFG) == pytest.approx(26.0)

    def test_bad_config(self):
        with pytest.raises(ConfigurationError):
            CellConfig(inner_radius=100, outer_radius=20)


class TestRates:
    def test_unit_snr(self):
        cfg = CellConfig(bandwidth_efficiency=1.0)
        assert truncated_shannon_rate(1.0, cfg) == 1.0

    def test_floor_and_cap(self):
        assert truncated_shannon_rate(db_to_linear(-7.0), CFG) == 0.0
        assert truncated_shannon_rate(1e12, CFG) == CFG.shannon_max_rate

    @given(st.floats(-10, 45), st.floats(-10, 45))
    def test_bisection_matches_closed_form(self, da, db):
        ga, gb = 10 ** (da / 10), 10 ** (db / 10)
        raw, expect = closed_form_common_rate(ga, gb, CFG)
        floor = CFG.bandwidth_efficiency * math.log2(1 + 10 ** (CFG.shannon_min_snr / 10))
        if abs(raw - floor) < 1e-6:
            return  # truncation is discontinuous there
        got = float(superposition_common_rate(ga, gb, CFG))
        assert got == pytest.approx(expect, abs=2e-9)

    @pytest.mark.parametrize("da,db", [(0.0, 10.0), (5.0, 25.0), (3.0, 3.0)])
    def test_bisection_matches_grid(self, da, db):
        ga, gb = 10 ** (da / 10), 10 ** (db / 10)
        gs, gw = max(ga, gb), min(ga, gb)
        best = 0.0
        for r in np.linspace(0, 4.8, 200_001):
            x = 2 ** (r / CFG.bandwidth_efficiency) - 1
            p = x / gs
            if p <= 1 and (1 - p) * gw >= x * (p * gw + 1):
                best = r
        assert float(superposition_common_rate(ga, gb, CFG)) == pytest.approx(best, abs=4.8 / 200_000)

    @given(st.floats(-10, 45), st.floats(-10, 45))
    def test_pair_bracketed(self, da, db):
        ga, gb = 10 ** (da / 10), 10 ** (db / 10)
        ra, rb = truncated_shannon_rate(ga, CFG), truncated_shannon_rate(gb, CFG)
        pair = float(pair_sum_rate(ga, gb, CFG))
        assert pair >= 2 * float(symmetric_tdma_rate(ra, rb)) - 1e-12
        assert pair <= ra + rb + 1e-9

    def test_tdma_zero(self):
        assert float(symmetric_tdma_rate(0.0, 0.0)) == 0.0


class TestCellSampler:
    def test_singletons_follow_fades(self):
        users = drop_users(CFG, 3)
        smp = CellSampler(users, CAT, CFG)
        perf = smp.sample(np.random.default_rng(9), 1000)
        fades = np.random.default_rng(9).exponential(1.0, (1000, 5))
        snr = fades * db_to_linear([u.mean_snr_db for u in users])
        for i in range(5):
            np.testing.assert_array_equal(perf[:, CAT.index({i})], truncated_shannon_rate(snr[:, i], CFG))
        assert (perf[:, 0] == 0).all()

    def test_invariants(self):
        smp = CellSampler(drop_users(CellConfig(tx_power=-10.0), 4), CAT, CFG)
        perf = smp.sample(np.random.default_rng(1), 20_000)
        assert np.isfinite(perf).all() and (perf >= 0).all()
        assert perf.max() <= CAT.m * CFG.shannon_max_rate

    def test_stationary(self):
        smp = CellSampler(drop_users(CellConfig(tx_power=-10.0), 4), CAT, CFG)
        perf = smp.sample(np.random.default_rng(2), 40_000)
        for moment in (perf, perf**2):
            a, b = moment[:20_000], moment[20_000:]
            se = np.sqrt(a.var(axis=0) / 20_000 + b.var(axis=0) / 20_000) + 1e-12
            assert (np.abs(a.mean(axis=0) - b.mean(axis=0)) <= 5 * se).all()

    def test_seed_determinism(self):
        users = drop_users(CFG, 3)
        x = sample_performance(users, CAT, CFG, rng_stream(7, 3, 10, 0))
        y = sample_performance(users, CAT, CFG, rng_stream(7, 3, 10, 0))
        z = sample_performance(users, CAT, CFG, rng_stream(7, 3, 10, 1))
        assert np.array_equal(x, y) and not np.array_equal(x, z)

    def test_rejects_triples(self):
        with pytest.raises(ConfigurationError):
            CellSampler(drop_users(CellConfig(n_users=3), 0), enumerate_virtual_users(3, 3), CFG)


class TestSynthetic:
    def test_fixed_two_user(self):
        cat = enumerate_virtual_users(2, 1)
        smp = synthetic_sampler("fixed", {"rates": [0, 1, 2]}, cat)
        assert smp.sample(None, 3).tolist() == [[0, 1, 2]] * 3

    def test_exponential_mean(self):
        cat = enumerate_virtual_users(3, 1)
        mu = np.array([5.0, 1.0, 2.0, 3.0])
        x = synthetic_sampler("exponential", {"means": mu}, cat).sample(np.random.default_rng(0), 100_000)
        assert x[:, 0].max() == 0
        assert np.allclose(x[:, 1:].mean(axis=0), mu[1:], rtol=0.02)

    def test_lognormal(self):
        cat = enumerate_virtual_users(2, 1)
        flat = synthetic_sampler("lognormal", {"means": [0, 1, 2], "sigma": 0}, cat)
        assert flat.sample(np.random.default_rng(0), 4).tolist() == FixedSampler([0, 1, 2]).sample(None, 4).tolist()
        x = synthetic_sampler("lognormal", {"means": [0, 1, 2], "sigma": 0.5}, cat).sample(np.random.default_rng(0), 100_000)
        assert np.allclose(x[:, 1:].mean(axis=0), [1, 2], rtol=0.02)

    @pytest.mark.parametrize("kind,params", [
        ("fixed", {}),
        ("fixed", {"rates": [0, 1]}),
        ("exponential", {"means": [0, -1, 1]}),
        ("lognormal", {"means": [0, 1, 1], "sigma": -1}),
        ("uniform", {"means": [0, 1, 1]}),
    ])
    def test_invalid(self, kind, params):
        with pytest.raises(ConfigurationError):
            synthetic_sampler(kind, params, enumerate_virtual_users(2, 1))
