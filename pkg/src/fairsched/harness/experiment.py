"""Monte Carlo study of window utility versus window-length."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..calibration import CalibrationReport, Z95, calibrate_thresholds, estimate_long_term_utility
from ..channel import CellSampler, drop_users, rng_stream, synthetic_sampler
from ..core import enumerate_virtual_users
from ..strategies import InvariantViolation, make_strategy
from .bounds import VacuousBoundError, theorem4_bound, wald_lower_bound
from .config import ExperimentConfig

log = logging.getLogger(__name__)

CSV_HEADER = ["s", "strategy", "mean_utility", "ci_half", "violations", "stop_frac", "wald_lb", "thm4_lb"]

# Stream keys under the master seed.
DROP_STREAM, CALIB_STREAM, LONG_RUN_STREAM, TRIAL_STREAM = 0, 1, 2, 3


@dataclass
class ExperimentRow:
    s: int | None                 # None for the long-term reference row
    strategy: str
    mean_utility: float
    ci_half: float
    violations: int | None = None
    stop_frac: float | None = None
    wald_lb: float | None = None
    thm4_lb: float | None = None
    invariant_failures: int = 0

    def csv_fields(self) -> list[str]:
        fmt = lambda x: "" if x is None else f"{x:.12g}"  # noqa: E731
        return [
            "inf" if self.s is None else str(self.s),
            self.strategy,
            fmt(self.mean_utility),
            fmt(self.ci_half),
            "" if self.violations is None else str(self.violations),
            fmt(self.stop_frac),
            fmt(self.wald_lb),
            fmt(self.thm4_lb),
        ]


@dataclass
class ExperimentResult:
    rows: list[ExperimentRow]
    calibration: CalibrationReport | None
    thresholds: np.ndarray
    u_tbs: float
    u_tbs_half: float

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in self.rows:
            w.writerow(row.csv_fields())
        return buf.getvalue()

    @property
    def ok(self) -> bool:
        """No fairness violation or invariant failure for ORR/ATBS rows."""
        return all(
            (r.violations or 0) == 0 and r.invariant_failures == 0
            for r in self.rows
            if r.strategy in ("orr", "atbs")
        )


def build_sampler(cfg: ExperimentConfig, catalog):
    if cfg.sampler_kind == "cell":
        seed = cfg.drop_seed if cfg.drop_seed is not None else rng_stream(cfg.seed, DROP_STREAM)
        return CellSampler(drop_users(cfg.cell, seed), catalog, cfg.cell)
    return synthetic_sampler(cfg.sampler_kind, cfg.sampler_params, catalog)


# Worker-side context, set once per process.
_CTX: dict = {}


def _init_worker(ctx: dict) -> None:
    _CTX.clear()
    _CTX.update(ctx)


def _run_trials(s: int, strategy_name: str, trial_ids: list[int]):
    catalog, demand, sampler = _CTX["catalog"], _CTX["demand"], _CTX["sampler"]
    strategy = make_strategy(strategy_name, catalog, demand, _CTX["thresholds"])
    lo = np.array(demand.min_counts(s))
    hi = np.array(demand.max_counts(s))
    out = []
    for k in trial_ids:
        # Same stream for every strategy: common random numbers across rows.
        perf = sampler.sample(rng_stream(_CTX["seed"], TRIAL_STREAM, s, k), s)
        try:
            run = strategy.run(perf)
        except InvariantViolation as exc:
            out.append((k, float("nan"), True, None, str(exc)))
            continue
        counts = catalog.membership[run.choices].sum(axis=0)
        violated = bool(np.any(counts < lo) or np.any(counts > hi))
        out.append((k, run.utility, violated, run.stop_time, None))
    return out


def _chunks(n: int, parts: int) -> list[list[int]]:
    size = max(1, -(-n // parts))
    return [list(range(i, min(n, i + size))) for i in range(0, n, size)]


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    cfg.validate()
    workers = workers or cfg.workers
    catalog = enumerate_virtual_users(cfg.n, cfg.n_max)
    sampler = build_sampler(cfg, catalog)

    report = None
    if cfg.thresholds is not None:
        thresholds = np.asarray(cfg.thresholds, dtype=float)
    else:
        report = calibrate_thresholds(cfg.demand, catalog, sampler, rng_stream(cfg.seed, CALIB_STREAM), cfg.calibration)
        if not report.converged:
            log.warning("threshold calibration did not converge after %d iterations", report.iterations)
        thresholds = report.thresholds
    u_tbs, u_half = estimate_long_term_utility(thresholds, catalog, sampler, cfg.horizon, rng_stream(cfg.seed, LONG_RUN_STREAM))
    if report is not None and report.oscillating:
        # No fixed threshold vector attains the long-term optimum under an
        # atomic rate law; only the trajectory average does.
        log.warning("calibration oscillates; reference utility is the trajectory average")
        u_tbs, u_half = report.u_tbs_estimate, 0.0
    eps = report.epsilon if report is not None else None

    ctx = {"catalog": catalog, "demand": cfg.demand, "sampler": sampler,
           "thresholds": thresholds, "seed": cfg.seed}
    jobs = [(s, name) for s in cfg.window_lengths for name in cfg.strategies]
    results: dict[tuple[int, str], list] = {}
    if workers == 1:
        _init_worker(ctx)
        for s, name in jobs:
            results[(s, name)] = _run_trials(s, name, list(range(cfg.trials)))
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(ctx,)) as pool:
            futures = {
                (s, name, i): pool.submit(_run_trials, s, name, ids)
                for s, name in jobs
                for i, ids in enumerate(_chunks(cfg.trials, workers))
            }
            for (s, name, _), fut in futures.items():
                results.setdefault((s, name), []).extend(fut.result())

    rows = []
    for s, name in jobs:
        trials = sorted(results[(s, name)], key=lambda r: r[0])
        rows.append(_aggregate(s, name, trials, catalog.m, u_tbs, eps))
    rows.append(ExperimentRow(None, "tbs", u_tbs, u_half))
    return ExperimentResult(rows, report, thresholds, u_tbs, u_half)


def _aggregate(s, name, trials, m, u_tbs, eps) -> ExperimentRow:
    failures = [t for t in trials if t[4] is not None]
    for t in failures:
        log.error("s=%d %s trial %d: %s", s, name, t[0], t[4])
    good = [t for t in trials if t[4] is None]
    util = np.array([t[1] for t in good], dtype=float)
    mean = float(util.mean()) if util.size else float("nan")
    half = Z95 * float(util.std(ddof=1)) / np.sqrt(util.size) if util.size > 1 and np.ptp(util) > 0 else 0.0
    row = ExperimentRow(s, name, mean, half, sum(t[2] for t in trials), invariant_failures=len(failures))
    if name == "atbs" and good:
        stops = [t[3] for t in good]
        row.stop_frac = float(np.mean(stops)) / s
        row.wald_lb = wald_lower_bound(stops, s, u_tbs)
        if eps is not None:
            try:
                row.thm4_lb = theorem4_bound(m, s, eps)
            except VacuousBoundError:
                row.thm4_lb = 0.0
    return row


def write_csv(result: ExperimentResult, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(result.csv_text())
