"""Flat YAML experiment configuration.

Only the keys of :class:`ExperimentConfig` are accepted; anything else is a
:class:`~ricianmiso.errors.ConfigError` so that typos cannot silently change
a sweep.
"""
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..channel import GEOMETRY_MODES, PathlossParams
from ..errors import ConfigError, RicianMisoError

REQUIRED = ("N", "K", "rho", "nu", "seed")


@dataclass
class ExperimentConfig:
    N: list
    K: list
    rho: list
    nu: list
    seed: int
    trials: int = 1000
    geometry: str = "uniform-disk"
    pathloss_exponent: float = 3.5
    pathloss_cutoff_m: float = 25.0
    pathloss_ref_db: float = -86.5
    cell_radius_m: float = 250.0
    P_T: float = 10.0
    sigma2: float = 1e-13
    lambda_mode: str = "rule"
    lambda_value: float = None
    lambda_samples: int = 100_000
    drops: int = 1
    fp_tol: float = 1e-12
    fp_max_iter: int = 10_000
    threshold_N: list = field(default_factory=lambda: [32, 64, 128])
    threshold_pct: list = field(default_factory=lambda: [10.0, 5.0, 3.0])
    output: str = "results"

    def __post_init__(self):
        self.validate()

    @property
    def pathloss(self):
        return PathlossParams.from_db(self.pathloss_exponent, self.pathloss_cutoff_m,
                                      self.pathloss_ref_db, self.cell_radius_m)

    def thresholds(self):
        return dict(zip(self.threshold_N, self.threshold_pct))

    def cells(self):
        """Sweep cells in a fixed order: K, nu, rho, N."""
        return [(N, K, rho, nu) for K in self.K for nu in self.nu for rho in self.rho for N in self.N]

    def validate(self):
        for name in ("N", "K", "rho", "nu", "threshold_N", "threshold_pct"):
            val = getattr(self, name)
            if not isinstance(val, (list, tuple)) or not val:
                raise ConfigError(f"{name} must be a non-empty list")
            setattr(self, name, list(val))
        if any(not isinstance(n, int) or n < 1 for n in self.N + self.K):
            raise ConfigError("N and K entries must be positive integers")
        if max(self.K) > min(self.N):
            raise ConfigError("every N must be >= every K")
        if any(not r >= 0 for r in self.rho):
            raise ConfigError("rho entries must be non-negative")
        if any(not 0 <= v < 1 for v in self.nu):
            raise ConfigError("nu entries must lie in [0, 1)")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an integer in [0, 2**64)")
        for name in ("trials", "lambda_samples", "drops", "fp_max_iter"):
            if not isinstance(getattr(self, name), int) or getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.geometry not in GEOMETRY_MODES:
            raise ConfigError(f"geometry must be one of {GEOMETRY_MODES}")
        for name in ("P_T", "sigma2", "fp_tol"):
            if not float(getattr(self, name)) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.lambda_mode not in ("rule", "explicit"):
            raise ConfigError("lambda_mode must be 'rule' or 'explicit'")
        if self.lambda_mode == "explicit" and not (self.lambda_value is not None and self.lambda_value > 0):
            raise ConfigError("lambda_mode 'explicit' needs a positive lambda_value")
        if len(self.threshold_N) != len(self.threshold_pct):
            raise ConfigError("threshold_N and threshold_pct must have the same length")
        try:
            self.pathloss
        except RicianMisoError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self):
        return dataclasses.asdict(self)

    def replace(self, **changes):
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})


def _coerce(name, value, template):
    # YAML reads 1e-13 as a string; accept numeric strings for float fields
    if isinstance(template, float) or name in ("P_T", "sigma2", "lambda_value", "fp_tol"):
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                raise ConfigError(f"{name}: expected a number, got {value!r}") from None
        if isinstance(value, int) and not isinstance(value, bool):
            return float(value)
    if name in ("rho", "nu", "threshold_pct") and isinstance(value, list):
        return [float(v) for v in value]
    return value


def config_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    known = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    missing = [k for k in REQUIRED if k not in data]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    defaults = ExperimentConfig.__dataclass_fields__
    kwargs = {}
    for name, value in data.items():
        default = defaults[name].default
        kwargs[name] = _coerce(name, value, default)
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return config_from_dict(data)


def dump_config(config, path):
    data = {}
    for k, v in config.to_dict().items():
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        data[k] = v
    Path(path).write_text(yaml.safe_dump(data, sort_keys=False))
