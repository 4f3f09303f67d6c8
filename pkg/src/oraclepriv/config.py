"""Flat experiment configuration: defaults, a YAML file, then command-line flags."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import yaml

from .errors import InputError
from .queries import FAMILIES, MAX_DIM

MECHANISMS = ("rspm", "gaussian-rspm", "prsma", "expmech")
AUDIT_MECHANISMS = ("rspm", "gaussian-rspm", "exact-erm", "constant", "randomized-response")
SYNTH_PRESETS = ("gaussian-rspm", "private-oracle", "prsma")
REGRET_KINDS = ("fpl", "ftpl")


@dataclass
class ExperimentConfig:
    family: str = "conj"
    d: int = 3
    grid: Optional[list] = None  # halfspace weight grid V
    mechanism: str = "rspm"
    preset: str = "gaussian-rspm"
    eps: float = 1.0
    delta: float = 0.05
    beta: float = 0.1
    T: Optional[int] = None
    alpha0: Optional[float] = None
    trials: Optional[int] = None  # per-command default when unset
    n: int = 500  # size of the generated dataset when no file is given
    p: float = 0.5  # coordinate marginal of the generated dataset
    n_grid: list = field(default_factory=lambda: [500, 1000])
    eps_grid: list = field(default_factory=lambda: [1.0])
    policy: str = "never"
    reps_cap: int = 100_000
    raw: bool = False
    data: Optional[str] = None
    labeled: bool = False
    output: Optional[str] = None
    kind: str = "fpl"
    seeds: int = 20
    seed: int = 0
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    out: str = "runs"
    trace: bool = False

    def validate(self) -> "ExperimentConfig":
        if self.family not in FAMILIES:
            raise InputError(f"class must be one of {FAMILIES}")
        if not 1 <= self.d <= MAX_DIM:
            raise InputError(f"d must lie in [1, {MAX_DIM}]")
        if self.mechanism not in MECHANISMS + AUDIT_MECHANISMS:
            raise InputError(f"unknown mechanism {self.mechanism!r}")
        if self.preset not in SYNTH_PRESETS:
            raise InputError(f"preset must be one of {SYNTH_PRESETS}")
        if self.kind not in REGRET_KINDS:
            raise InputError(f"regret kind must be one of {REGRET_KINDS}")
        if not self.eps > 0:
            raise InputError("eps must be positive")
        if not self.delta >= 0:
            raise InputError("delta must be non-negative")
        if not 0 < self.beta < 1:
            raise InputError("beta must lie in (0, 1)")
        if self.T is not None and self.T < 1:
            raise InputError("T must be at least 1")
        if self.alpha0 is not None and not self.alpha0 > 0:
            raise InputError("alpha0 must be positive")
        if self.trials is not None and self.trials < 1:
            raise InputError("trials must be at least 1")
        for name in ("n", "seeds", "jobs", "reps_cap"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be at least 1")
        if not 0 <= self.p <= 1:
            raise InputError("p must lie in [0, 1]")
        if any(int(n) < 1 for n in self.n_grid) or any(not float(e) > 0 for e in self.eps_grid):
            raise InputError("grids must hold positive values")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


_ALIASES = {"class": "family"}
_FIELDS = {f.name: f for f in fields(ExperimentConfig)}


def normalize_key(key: str) -> str:
    key = key.replace("-", "_")
    return _ALIASES.get(key, key)


def _coerce(name: str, value):
    default = ExperimentConfig()
    ref = getattr(default, name)
    if value is None:
        if ref is not None:
            raise InputError(f"{name} cannot be null")
        return None
    try:
        if name in ("n_grid",):
            return [int(v) for v in (value.split(",") if isinstance(value, str) else value)]
        if name in ("eps_grid", "grid"):
            return [float(v) for v in (value.split(",") if isinstance(value, str) else value)]
        if name in ("T", "trials"):
            return int(value)
        if name in ("alpha0",):
            return float(value)
        if isinstance(ref, bool):
            if isinstance(value, str):
                return value.lower() in ("1", "true", "yes", "on")
            return bool(value)
        if isinstance(ref, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if isinstance(ref, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise InputError(f"bad value for {name}: {value!r}") from None


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise InputError(f"config {path} is not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise InputError(f"config {path} must be a flat key/value mapping")
    return data


def build_config(file_values: Optional[dict] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Merge defaults < file < overrides. Unknown keys are rejected."""
    merged: dict = {}
    for source in (file_values or {}, overrides or {}):
        for k, v in source.items():
            name = normalize_key(k)
            if name not in _FIELDS:
                raise InputError(f"unknown config key {k!r}")
            if isinstance(v, (dict,)):
                raise InputError(f"config key {k!r} must be a scalar or list")
            merged[name] = _coerce(name, v)
    return ExperimentConfig(**merged).validate()
