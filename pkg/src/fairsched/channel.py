"""Performance-vector samplers.

Every sampler exposes ``sample(rng, size) -> ndarray (size, m)``: one row
per slot, one column per virtual user, rows i.i.d. The empty virtual user
is always worth 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .core import ConfigurationError, VirtualUserCatalog

# Bisection on the common rate of a pair stops at this width (bits/s/Hz).
PAIR_RATE_TOL = 1e-9


def rng_stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for stream ``key`` under ``master_seed``."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(key)))


def db_to_linear(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class CellConfig:
    """Single-cell downlink link budget. Powers in dBm, distances in m."""

    inner_radius: float = 20.0
    outer_radius: float = 100.0
    n_users: int = 5
    tx_power: float = 30.0
    noise_power: float = -94.0
    pathloss_exponent: float = 3.0
    pathloss_ref_db: float = 38.0
    shadowing_sigma: float = 8.0
    shannon_min_snr: float = -6.5
    shannon_max_rate: float = 4.8
    bandwidth_efficiency: float = 0.75

    def __post_init__(self):
        if not 0 < self.inner_radius < self.outer_radius:
            raise ConfigurationError("need 0 < inner_radius < outer_radius")
        if self.shannon_max_rate <= 0:
            raise ConfigurationError("shannon_max_rate must be positive")
        if self.bandwidth_efficiency <= 0:
            raise ConfigurationError("bandwidth_efficiency must be positive")
        if self.n_users < 1:
            raise ConfigurationError("need at least one user")
        if self.shadowing_sigma < 0:
            raise ConfigurationError("shadowing_sigma must be non-negative")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class UserChannelState:
    distance: float
    shadowing_db: float
    mean_snr_db: float


def mean_snr_db(distance, shadowing_db, config: CellConfig):
    pathloss = config.pathloss_ref_db + 10.0 * config.pathloss_exponent * np.log10(distance)
    return config.tx_power - pathloss + shadowing_db - config.noise_power


def drop_users(config: CellConfig, seed: int | np.random.Generator) -> list[UserChannelState]:
    """Place users uniformly over the annulus and draw their shadowing."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    r2 = rng.uniform(config.inner_radius**2, config.outer_radius**2, size=config.n_users)
    dist = np.sqrt(r2)
    shadow = rng.normal(0.0, config.shadowing_sigma, size=config.n_users)
    snr = mean_snr_db(dist, shadow, config)
    return [UserChannelState(float(d), float(x), float(g)) for d, x, g in zip(dist, shadow, snr)]


def truncated_shannon_rate(snr_linear, config: CellConfig):
    """``min(eta*log2(1+snr), max_rate)``, or 0 below the SNR threshold."""
    snr = np.asarray(snr_linear, dtype=float)
    rate = np.minimum(config.bandwidth_efficiency * np.log2(1.0 + snr), config.shannon_max_rate)
    out = np.where(snr < db_to_linear(config.shannon_min_snr), 0.0, rate)
    return float(out) if out.ndim == 0 else out


def _truncate_rate(raw_rate, config: CellConfig):
    """Truncation applied to an already computed eta*log2(1+sinr) value."""
    floor = config.bandwidth_efficiency * math.log2(1.0 + float(db_to_linear(config.shannon_min_snr)))
    return np.where(raw_rate < floor, 0.0, np.minimum(raw_rate, config.shannon_max_rate))


def superposition_common_rate(snr_a, snr_b, config: CellConfig):
    """Largest equal rate both users of a pair get from superposition coding.

    The stronger user cancels the weaker user's signal before decoding its
    own. Returned rates are truncated per user.
    """
    eta = config.bandwidth_efficiency
    strong = np.maximum(snr_a, snr_b)
    weak = np.minimum(snr_a, snr_b)

    def fits(r):
        x = np.exp2(r / eta) - 1.0          # SINR each user needs
        p_strong = x / strong               # power share for the strong user
        # The weak user tolerates the strong user's signal as noise.
        return (1.0 - p_strong) * weak >= x * (p_strong * weak + 1.0)

    lo = np.zeros(np.broadcast(strong, weak).shape)
    # The cap bounds the useful bracket: above it truncation hides the difference.
    hi = np.minimum(eta * np.log2(1.0 + weak), config.shannon_max_rate) + 0.0 * lo
    top_ok = fits(hi)
    iters = max(1, math.ceil(math.log2(max(config.shannon_max_rate, 1.0) / PAIR_RATE_TOL)))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = fits(mid)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    common = np.where(top_ok, hi, lo)
    return _truncate_rate(common, config)


def symmetric_tdma_rate(rate_a, rate_b):
    """Equal per-user rate from time sharing two single-user links."""
    total = rate_a + rate_b
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, rate_a * rate_b / np.where(total > 0, total, 1.0), 0.0)


def pair_sum_rate(snr_a, snr_b, config: CellConfig):
    """Best symmetric sum-rate for a pair: superposition or time sharing."""
    sc = superposition_common_rate(snr_a, snr_b, config)
    td = symmetric_tdma_rate(truncated_shannon_rate(snr_a, config), truncated_shannon_rate(snr_b, config))
    return 2.0 * np.maximum(sc, td)


class CellSampler:
    """Rayleigh-faded downlink rates for a fixed user drop."""

    def __init__(self, users: list[UserChannelState], catalog: VirtualUserCatalog, config: CellConfig):
        if len(users) != catalog.n:
            raise ConfigurationError(f"{len(users)} users dropped but catalog has n={catalog.n}")
        if catalog.n_max > 2:
            raise ConfigurationError("cell model defines rates for virtual users of size <= 2 only")
        self.users = users
        self.catalog = catalog
        self.config = config
        self.mean_snr = db_to_linear([u.mean_snr_db for u in users])
        self._singles = [(j, next(iter(sub))) for j, sub in enumerate(catalog.subsets) if len(sub) == 1]
        self._pairs = [(j, tuple(sorted(sub))) for j, sub in enumerate(catalog.subsets) if len(sub) == 2]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        fades = rng.exponential(1.0, size=(size, self.catalog.n))
        snr = fades * self.mean_snr[None, :]
        out = np.zeros((size, self.catalog.m))
        if self._singles:
            js, us = zip(*self._singles)
            out[:, list(js)] = truncated_shannon_rate(snr[:, list(us)], self.config)
        if self._pairs:
            js = [j for j, _ in self._pairs]
            a = snr[:, [p[0] for _, p in self._pairs]]
            b = snr[:, [p[1] for _, p in self._pairs]]
            out[:, js] = pair_sum_rate(a, b, self.config)
        return out


def sample_performance(users, catalog: VirtualUserCatalog, config: CellConfig, rng: np.random.Generator) -> np.ndarray:
    """One slot's performance vector under the cell model."""
    return CellSampler(users, catalog, config).sample(rng, 1)[0]


class FixedSampler:
    def __init__(self, rates):
        self.rates = np.asarray(rates, dtype=float)

    def sample(self, rng, size: int) -> np.ndarray:
        return np.broadcast_to(self.rates, (size, self.rates.size)).copy()


class ExponentialSampler:
    def __init__(self, means):
        self.means = np.asarray(means, dtype=float)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.exponential(1.0, size=(size, self.means.size)) * self.means


class LognormalSampler:
    """Independent log-normal draws with the given means (sigma in log space)."""

    def __init__(self, means, sigma: float):
        self.means = np.asarray(means, dtype=float)
        self.sigma = float(sigma)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        z = rng.standard_normal(size=(size, self.means.size))
        return self.means * np.exp(self.sigma * z - 0.5 * self.sigma**2)


def synthetic_sampler(kind: str, params: dict, catalog: VirtualUserCatalog):
    """Build a test sampler. ``params`` holds ``rates`` or ``means`` (+ ``sigma``)."""
    key = "rates" if kind == "fixed" else "means"
    if key not in params:
        raise ConfigurationError(f"{kind} sampler needs '{key}'")
    vals = np.asarray(params[key], dtype=float)
    if vals.shape != (catalog.m,):
        raise ConfigurationError(f"{key} must have one entry per virtual user ({catalog.m})")
    if np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise ConfigurationError(f"{key} must be finite and non-negative")
    empty = [j for j, sub in enumerate(catalog.subsets) if not sub]
    vals[empty] = 0.0
    if kind == "fixed":
        return FixedSampler(vals)
    if kind == "exponential":
        return ExponentialSampler(vals)
    if kind == "lognormal":
        sigma = float(params.get("sigma", 1.0))
        if sigma < 0:
            raise ConfigurationError("sigma must be non-negative")
        return LognormalSampler(vals, sigma)
    raise ConfigurationError(f"unknown sampler kind {kind!r}")
