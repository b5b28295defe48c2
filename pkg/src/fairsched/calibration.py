"""Threshold search for the long-term threshold-based strategy.

Projected stochastic approximation on one signed multiplier per user:
a positive threshold means the user's lower demand binds, a negative one
means the upper demand binds. Iterates are averaged over the tail of the
run before being confirmed on a fresh batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import TemporalDemand, VirtualUserCatalog
from .strategies import measure_offsets

Z95 = 1.959963984540054


@dataclass(frozen=True)
class CalibrationConfig:
    step0: float = 1.0
    kappa: float = 100.0
    batch: int = 2000
    max_iter: int = 2000
    tol: float = 0.01
    min_iter: int = 200
    check_every: int = 25
    confirm_batches: int = 10

    def step(self, k: int) -> float:
        return self.step0 / (1.0 + k / self.kappa)


@dataclass
class CalibrationReport:
    thresholds: np.ndarray
    realized_shares: np.ndarray
    u_tbs_estimate: float
    epsilon: float
    iterations: int
    converged: bool
    # Shares only meet the demands on average over the threshold trajectory,
    # not at any single fixed threshold vector (atomic rate distributions).
    oscillating: bool = False
    eps_band: float = field(default=float("nan"))
    eps_capacity: float = field(default=float("nan"))

    def to_text(self) -> str:
        """Flat ``key = value`` block."""
        vec = lambda xs: ",".join(f"{x:.12g}" for x in xs)  # noqa: E731
        lines = [
            f"thresholds = {vec(self.thresholds)}",
            f"realized_shares = {vec(self.realized_shares)}",
            f"u_tbs_estimate = {self.u_tbs_estimate:.12g}",
            f"epsilon = {self.epsilon:.12g}",
            f"epsilon_band = {self.eps_band:.12g}",
            f"epsilon_capacity = {self.eps_capacity:.12g}",
            f"iterations = {self.iterations}",
            f"converged = {str(self.converged).lower()}",
            f"oscillating = {str(self.oscillating).lower()}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> CalibrationReport:
        kv = {}
        for line in text.splitlines():
            if line.strip():
                k, v = line.split("=", 1)
                kv[k.strip()] = v.strip()
        vec = lambda s: np.array([float(x) for x in s.split(",")])  # noqa: E731
        return cls(
            thresholds=vec(kv["thresholds"]),
            realized_shares=vec(kv["realized_shares"]),
            u_tbs_estimate=float(kv["u_tbs_estimate"]),
            epsilon=float(kv["epsilon"]),
            iterations=int(kv["iterations"]),
            converged=kv["converged"] == "true",
            oscillating=kv.get("oscillating") == "true",
            eps_band=float(kv.get("epsilon_band", "nan")),
            eps_capacity=float(kv.get("epsilon_capacity", "nan")),
        )


def epsilon_margins(shares, demand: TemporalDemand, n_max: int) -> tuple[float, float, float]:
    """(eps, eps_band, eps_capacity) for long-term shares ``shares``."""
    w = np.asarray(shares, dtype=float)
    lo = np.array([float(x) for x in demand.lower])
    hi = np.array([float(x) for x in demand.upper])
    eps_band = float(min(np.min(w - lo), np.min(hi - w)))
    eps_cap = float(n_max - w.sum())
    return min(eps_band, eps_cap), eps_band, eps_cap


def tbs_batch(perf: np.ndarray, offsets: np.ndarray, catalog: VirtualUserCatalog):
    """Shares and per-slot utilities of the unconstrained TBS on a batch."""
    choices = np.argmax(perf + offsets, axis=1)
    util = perf[np.arange(perf.shape[0]), choices]
    shares = catalog.membership[choices].mean(axis=0)
    return shares, util


def _in_band(shares, lo, hi, tol) -> bool:
    return bool(np.all(shares >= lo - tol) and np.all(shares <= hi + tol))


def _update(lam, shares, lo, hi, step):
    below = lo - shares
    above = shares - hi
    free = np.maximum(below, 0.0) - np.maximum(above, 0.0)
    grad = np.where(lam > 0, below, np.where(lam < 0, -above, free))
    new = lam + step * grad
    # A multiplier may fall back to zero but never jump to the other edge.
    new = np.where(lam > 0, np.maximum(new, 0.0), new)
    new = np.where(lam < 0, np.minimum(new, 0.0), new)
    return new


def calibrate_thresholds(
    demand: TemporalDemand,
    catalog: VirtualUserCatalog,
    sampler,
    rng: np.random.Generator,
    config: CalibrationConfig = CalibrationConfig(),
) -> CalibrationReport:
    lo = np.array([float(x) for x in demand.lower])
    hi = np.array([float(x) for x in demand.upper])
    n = catalog.n
    if lo.sum() > catalog.n_max:
        raise ValueError("lower demands exceed n_max; no long-term schedule exists")

    def confirm(lam):
        shares = np.zeros(n)
        util = []
        off = measure_offsets(lam, catalog)
        for _ in range(config.confirm_batches):
            sh, u = tbs_batch(sampler.sample(rng, config.batch), off, catalog)
            shares += sh
            util.append(u)
        return shares / config.confirm_batches, float(np.concatenate(util).mean())

    def report(lam, shares, util, k, converged, oscillating=False):
        eps, eb, ec = epsilon_margins(shares, demand, catalog.n_max)
        return CalibrationReport(
            thresholds=np.asarray(lam, dtype=float),
            realized_shares=np.asarray(shares, dtype=float),
            u_tbs_estimate=util,
            epsilon=eps,
            iterations=k,
            converged=converged,
            oscillating=oscillating,
            eps_band=eb,
            eps_capacity=ec,
        )

    lam = np.zeros(n)
    shares, util = confirm(lam)
    if _in_band(shares, lo, hi, config.tol):
        return report(lam, shares, util, 0, True)

    lam_hist, share_hist, util_hist = [], [], []
    for k in range(config.max_iter):
        sh, u = tbs_batch(sampler.sample(rng, config.batch), measure_offsets(lam, catalog), catalog)
        lam_hist.append(lam)
        share_hist.append(sh)
        util_hist.append(u.mean())
        lam = _update(lam, sh, lo, hi, config.step(k))
        done = k + 1
        if done >= config.min_iter and done % config.check_every == 0:
            lam_avg = np.mean(lam_hist[done // 2:], axis=0)
            shares, util = confirm(lam_avg)
            if _in_band(shares, lo, hi, config.tol):
                return report(lam_avg, shares, util, done, True)

    tail = slice(config.max_iter // 2, None)
    lam_avg = np.mean(lam_hist[tail], axis=0)
    shares, util = confirm(lam_avg)
    if _in_band(shares, lo, hi, config.tol):
        return report(lam_avg, shares, util, config.max_iter, True)
    # Fall back to trajectory averages, which is all an atomic law allows.
    erg_shares = np.mean(share_hist[tail], axis=0)
    erg_util = float(np.mean(util_hist[tail]))
    if _in_band(erg_shares, lo, hi, config.tol):
        return report(lam_avg, erg_shares, erg_util, config.max_iter, True, oscillating=True)
    return report(lam_avg, shares, util, config.max_iter, False)


def estimate_long_term_utility(
    thresholds,
    catalog: VirtualUserCatalog,
    sampler,
    horizon: int,
    rng: np.random.Generator,
    chunk: int = 50_000,
) -> tuple[float, float]:
    """Mean per-slot TBS utility and its 95% normal half-width."""
    if horizon < 1:
        raise ValueError("horizon must be positive")
    off = measure_offsets(thresholds, catalog)
    parts = []
    left = horizon
    while left > 0:
        size = min(chunk, left)
        _, u = tbs_batch(sampler.sample(rng, size), off, catalog)
        parts.append(u)
        left -= size
    util = np.concatenate(parts)
    mean = float(util.mean())
    half = Z95 * float(util.std(ddof=1)) / np.sqrt(horizon) if horizon > 1 and np.ptp(util) > 0 else 0.0
    return mean, half
