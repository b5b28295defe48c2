"""Command line entry point: ``fairsched <command> --config FILE``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace

from .calibration import CalibrationReport, calibrate_thresholds
from .channel import drop_users, rng_stream
from .core import ConfigurationError, InfeasibleError, enumerate_virtual_users, format_rational
from .feasibility import inequality_feasible
from .harness.config import load_config
from .harness.experiment import CALIB_STREAM, DROP_STREAM, build_sampler, run_experiment, write_csv
from .harness.oracle import OracleCapacityError, utility_curve

log = logging.getLogger("fairsched")


def _out(path):
    return open(path, "w", newline="") if path else sys.stdout


def cmd_feasible(args) -> int:
    cfg = load_config(args.config)
    with _out(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "feasible"] + [f"c{i + 1}" for i in range(cfg.n)])
        for s in range(args.s_min, args.s_max + 1):
            res = inequality_feasible(s, cfg.demand, cfg.n_max)
            w.writerow([s, int(res.feasible)] + (list(res.witness_counts) if res.feasible else [""] * cfg.n))
    return 0


def cmd_calibrate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    catalog = enumerate_virtual_users(cfg.n, cfg.n_max)
    sampler = build_sampler(cfg, catalog)
    report = calibrate_thresholds(cfg.demand, catalog, sampler, rng_stream(cfg.seed, CALIB_STREAM), cfg.calibration)
    with _out(args.output) as fh:
        fh.write(report.to_text())
    return 0 if report.converged else 1


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.thresholds_from:
        with open(args.thresholds_from) as fh:
            cfg = replace(cfg, thresholds=list(CalibrationReport.from_text(fh.read()).thresholds))
    result = run_experiment(cfg, workers=args.workers)
    path = args.output or cfg.output
    if path:
        write_csv(result, path)
    else:
        sys.stdout.write(result.csv_text())
    if not result.ok:
        log.error("fairness violations or invariant failures in ORR/ATBS rows")
        return 1
    return 0


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    if cfg.sampler_kind != "fixed":
        raise ConfigurationError("the oracle needs a fixed-rate sampler (sampler.kind: fixed)")
    rates = cfg.sampler_params["rates"]
    curve = utility_curve(args.s_max, cfg.demand, cfg.n_max, rates, range(args.s_min, args.s_max + 1))
    with _out(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "u_star"])
        for s in range(args.s_min, args.s_max + 1):
            w.writerow([s, "" if curve[s] is None else format_rational(curve[s])])
    return 0


def cmd_dump_channel(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    seed = cfg.drop_seed if cfg.drop_seed is not None else rng_stream(cfg.seed, DROP_STREAM)
    users = drop_users(cfg.cell, seed)
    with _out(args.output) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user", "distance_m", "shadowing_db", "mean_snr_db"])
        for i, u in enumerate(users):
            w.writerow([i + 1, f"{u.distance:.6f}", f"{u.shadowing_db:.6f}", f"{u.mean_snr_db:.6f}"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fairsched", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", required=True, help="YAML experiment config")
        sp.add_argument("--output", "-o", help="output path (default stdout)")
        if seed:
            sp.add_argument("--seed", type=int, help="override the master seed")

    sp = sub.add_parser("feasible", help="feasibility and witness counts per window-length")
    common(sp, seed=False)
    sp.add_argument("--s-min", type=int, default=1)
    sp.add_argument("--s-max", type=int, required=True)
    sp.set_defaults(func=cmd_feasible)

    sp = sub.add_parser("calibrate", help="search long-term thresholds")
    common(sp)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("run", help="Monte Carlo utility versus window-length")
    common(sp)
    sp.add_argument("--workers", type=int, help="worker processes")
    sp.add_argument("--thresholds-from", help="calibration report to take thresholds from")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("oracle", help="exact optimal window utility (fixed rates)")
    common(sp, seed=False)
    sp.add_argument("--s-min", type=int, default=1)
    sp.add_argument("--s-max", type=int, required=True)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("dump-channel", help="per-user mean SNR of the channel drop")
    common(sp)
    sp.set_defaults(func=cmd_dump_channel)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, InfeasibleError, OracleCapacityError) as exc:
        log.error("%s", exc)
        return 2
