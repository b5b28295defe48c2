"""Experiment configuration: YAML document, strict schema.

Example (all keys shown; only ``system``, ``demand`` and
``window_lengths`` are required)::

    system:
      n_users: 5            # count
      n_max: 2              # max simultaneously active users
    demand:
      lower: "1/5"          # scalar (all users) or list; "p/q" or decimal
      upper: 1
    window_lengths: [10, 100, 1000]   # slots
    trials: 200                       # windows per (s, strategy)
    strategies: [atbs]                # any of orr, tbs, atbs
    seed: 2019                        # master seed
    workers: 1
    output: results.csv
    sampler:
      kind: cell                      # cell | fixed | exponential | lognormal
      cell: {tx_power: 30.0}          # CellConfig overrides (dBm, m, dB)
      rates: [...]                    # fixed: one value per virtual user
      means: [...]                    # exponential / lognormal
      sigma: 1.0                      # lognormal, log-space std
    calibration:
      thresholds: [...]               # skip the search and use these
      step0: 1.0
      kappa: 100
      batch: 2000                     # slots per iteration
      max_iter: 2000
      tol: 0.01                       # share tolerance around the band
      horizon: 1000000                # slots for the long-term utility estimate
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from ..calibration import CalibrationConfig
from ..channel import CellConfig
from ..core import ConfigurationError, TemporalDemand, enumerate_virtual_users, to_rational
from ..feasibility import inequality_feasible

STRATEGIES = ("orr", "tbs", "atbs")
SAMPLER_KINDS = ("cell", "fixed", "exponential", "lognormal")

_TOP = {"system", "demand", "window_lengths", "trials", "strategies", "seed",
        "workers", "output", "sampler", "calibration"}
_SYSTEM = {"n_users", "n_max"}
_DEMAND = {"lower", "upper"}
_SAMPLER = {"kind", "cell", "rates", "means", "sigma", "drop_seed"}
_CALIB = {f.name for f in fields(CalibrationConfig)} | {"thresholds", "horizon"}
_CELL = {f.name for f in fields(CellConfig)}


@dataclass
class ExperimentConfig:
    n: int
    n_max: int
    demand: TemporalDemand
    window_lengths: list[int]
    trials: int = 200
    strategies: list[str] = field(default_factory=lambda: ["atbs"])
    seed: int = 0
    workers: int = 1
    output: str | None = None
    sampler_kind: str = "cell"
    cell: CellConfig = field(default_factory=CellConfig)
    sampler_params: dict = field(default_factory=dict)
    drop_seed: int | None = None
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    thresholds: list[float] | None = None
    horizon: int = 1_000_000

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigurationError("trials must be at least 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        if not self.window_lengths:
            raise ConfigurationError("window_lengths is empty")
        for name in self.strategies:
            if name not in STRATEGIES:
                raise ConfigurationError(f"unknown strategy {name!r}")
        if self.sampler_kind not in SAMPLER_KINDS:
            raise ConfigurationError(f"unknown sampler kind {self.sampler_kind!r}")
        if self.sampler_kind == "cell" and self.cell.n_users != self.n:
            raise ConfigurationError("sampler.cell.n_users disagrees with system.n_users")
        if self.demand.n != self.n:
            raise ConfigurationError("demand length disagrees with system.n_users")
        enumerate_virtual_users(self.n, self.n_max)
        for s in self.window_lengths:
            if not isinstance(s, int) or s < 1:
                raise ConfigurationError(f"window-length {s!r} must be a positive integer")
            res = inequality_feasible(s, self.demand, self.n_max)
            if not res.feasible:
                raise ConfigurationError(f"window-length {s} infeasible: {res.reason}")
        if self.thresholds is not None and len(self.thresholds) != self.n:
            raise ConfigurationError("calibration.thresholds needs one entry per user")
        if self.horizon < 1:
            raise ConfigurationError("calibration.horizon must be positive")


def _check_keys(section: str, got: dict, allowed: set) -> None:
    if not isinstance(got, dict):
        raise ConfigurationError(f"{section} must be a mapping")
    extra = set(got) - allowed
    if extra:
        raise ConfigurationError(f"unknown key(s) in {section}: {', '.join(sorted(extra))}")


def _vector(value, n: int, name: str):
    if isinstance(value, (list, tuple)):
        if len(value) != n:
            raise ConfigurationError(f"{name} needs {n} entries, got {len(value)}")
        return tuple(to_rational(str(v)) for v in value)
    return (to_rational(str(value)),) * n


def config_from_dict(doc: dict) -> ExperimentConfig:
    _check_keys("config", doc, _TOP)
    for key in ("system", "demand", "window_lengths"):
        if key not in doc:
            raise ConfigurationError(f"missing required key {key!r}")
    system = doc["system"]
    _check_keys("system", system, _SYSTEM)
    n, n_max = int(system["n_users"]), int(system["n_max"])
    dem = doc["demand"]
    _check_keys("demand", dem, _DEMAND)
    demand = TemporalDemand(_vector(dem.get("lower", 0), n, "demand.lower"),
                            _vector(dem.get("upper", 1), n, "demand.upper"))

    sampler = doc.get("sampler", {}) or {}
    _check_keys("sampler", sampler, _SAMPLER)
    cell_over = sampler.get("cell", {}) or {}
    _check_keys("sampler.cell", cell_over, _CELL)
    cell = CellConfig(**{"n_users": n, **cell_over})
    params = {k: sampler[k] for k in ("rates", "means", "sigma") if k in sampler}

    calib = dict(doc.get("calibration", {}) or {})
    _check_keys("calibration", calib, _CALIB)
    thresholds = calib.pop("thresholds", None)
    horizon = int(calib.pop("horizon", 1_000_000))

    cfg = ExperimentConfig(
        n=n,
        n_max=n_max,
        demand=demand,
        window_lengths=list(doc["window_lengths"]),
        trials=int(doc.get("trials", 200)),
        strategies=list(doc.get("strategies", ["atbs"])),
        seed=int(doc.get("seed", 0)),
        workers=int(doc.get("workers", 1)),
        output=doc.get("output"),
        sampler_kind=sampler.get("kind", "cell"),
        cell=cell,
        sampler_params=params,
        drop_seed=sampler.get("drop_seed"),
        calibration=CalibrationConfig(**calib),
        thresholds=None if thresholds is None else [float(x) for x in thresholds],
        horizon=horizon,
    )
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path) as fh:
        doc = yaml.safe_load(fh) or {}
    return config_from_dict(doc)


def ring_setup(**overrides) -> ExperimentConfig:
    """Five users on a 20-100 m ring, at most two active, lower share 0.2."""
    doc = {
        "system": {"n_users": 5, "n_max": 2},
        "demand": {"lower": "1/5", "upper": 1},
        "window_lengths": [10, 100, 1000, 10_000, 100_000],
        "trials": 200,
        "strategies": ["atbs"],
        "seed": 2019,
        "sampler": {"kind": "cell"},
    }
    doc.update(overrides)
    return config_from_dict(doc)
