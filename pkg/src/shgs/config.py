"""Run configuration: an INI file with a ``[run]`` and an optional ``[space]`` section.

Example::

    [run]
    dataset = lsm_10year.csv
    target = learning_rate
    iterations = 10

    [space]
    learning_rate = 0.001, 0.05, 0.001
    optimizer = sgd, adam
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from typing import Dict, Optional

from .engine import DEFAULT_POOLS, HyperparameterSpace, NumericRange, Pool
from .training import CATEGORICAL_HYPERPARAMETERS, HYPERPARAMETERS, INTEGER_HYPERPARAMETERS


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dataset: str
    target: str
    target_column: str = "metastasis"
    positive_label: Optional[str] = None
    iterations: int = 10
    seed: int = 0
    test_fraction: float = 0.2
    folds: int = 5
    output: str = "shgs_results"
    n_jobs: int = 1
    space_overrides: Dict[str, Pool] = field(default_factory=dict)

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie strictly between 0 and 1")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.target not in HYPERPARAMETERS or self.target in CATEGORICAL_HYPERPARAMETERS:
            raise ConfigError(f"unknown target hyperparameter {self.target!r}")

    def space(self) -> HyperparameterSpace:
        return HyperparameterSpace().with_overrides(self.space_overrides)


_RUN_KEYS = {f.name: f.type for f in fields(RunConfig) if f.name != "space_overrides"}
_CASTS = {"iterations": int, "seed": int, "test_fraction": float, "folds": int, "n_jobs": int}


def parse_override(name: str, text: str) -> Pool:
    """Parse ``lo, hi, step`` or a comma-separated catalog and check it against the default pool."""
    if name not in HYPERPARAMETERS:
        raise ConfigError(f"unknown hyperparameter {name!r} in [space]")
    parts = [p.strip() for p in text.split(",") if p.strip()]
    default = DEFAULT_POOLS[name]
    if name in CATEGORICAL_HYPERPARAMETERS:
        bad = [p for p in parts if p not in default]
        if not parts or bad:
            raise ConfigError(f"{name}: values {bad or parts} outside catalog {list(default)}")
        return tuple(parts)
    if len(parts) != 3:
        raise ConfigError(f"{name}: expected 'lo, hi, step', got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None
    integer = name in INTEGER_HYPERPARAMETERS
    if integer:
        if not all(float(v).is_integer() for v in (lo, hi, step)):
            raise ConfigError(f"{name}: bounds and step must be integers")
        lo, hi, step = int(lo), int(hi), int(step)
    if step <= 0 or lo > hi:
        raise ConfigError(f"{name}: empty or invalid range {text!r}")
    ratio = step / default.step
    if abs(ratio - round(ratio)) > 1e-6:
        raise ConfigError(f"{name}: step {step} is not a multiple of {default.step}")
    for bound in (lo, hi):
        if not default.contains(bound, n_train=10**9):
            raise ConfigError(f"{name}: {bound} lies outside the allowed pool")
    return NumericRange(lo, hi, step, integer=integer)


def parse_config(path=None, **flags) -> RunConfig:
    """Build a RunConfig from an optional INI file; non-None ``flags`` win."""
    values: Dict[str, object] = {}
    overrides: Dict[str, Pool] = {}
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        for section in parser.sections():
            if section not in ("run", "space"):
                raise ConfigError(f"unknown section [{section}]")
        if parser.has_section("run"):
            for key, text in parser.items("run"):
                if key not in _RUN_KEYS:
                    raise ConfigError(f"unknown key {key!r} in [run]")
                values[key] = text
        if parser.has_section("space"):
            for key, text in parser.items("space"):
                overrides[key] = parse_override(key, text)
    for key, value in flags.items():
        if key == "space_overrides":
            if value:
                overrides.update(value)
            continue
        if key not in _RUN_KEYS:
            raise ConfigError(f"unknown option {key!r}")
        if value is not None:
            values[key] = value
    for key in ("dataset", "target"):
        if key not in values:
            raise ConfigError(f"missing required setting {key!r}")
    for key, cast in _CASTS.items():
        if key in values:
            try:
                values[key] = cast(values[key])
            except ValueError:
                raise ConfigError(f"{key}: cannot parse {values[key]!r}") from None
    return RunConfig(space_overrides=overrides, **values)
