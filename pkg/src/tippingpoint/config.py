"""JSON run configuration for the command-line tool.

Example::

    {
      "seed": 7,
      "workers": 1,
      "selection": {"target_arm": "control", "reasons": ["dropout"], "early_window": 1.25},
      "imputation": {"method": "deterministic", "m": 100},
      "grid": {"start": 0, "stop": 1, "step": 0.05},
      "criterion": "upper-ci",
      "simulation": {"scenario": 1, "n_trials": 20},
      "output": {"sweep_csv": "sweep.csv", "km_svg": "km.svg"}
    }

Every section is optional; unknown keys are rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .analysis import Criterion
from .imputation import Arm, Direction, ImputationSpec, Method, SelectionCriteria
from .simulation import SimulationConfig, Scenario, scenario_config


class ConfigError(ValueError):
    pass


@dataclass
class SelectionSection:
    target_arm: str = "control"
    reasons: list = field(default_factory=lambda: ["dropout"])
    early_window: float | None = None


@dataclass
class ImputationSection:
    method: str = "deterministic"
    m: int = 100
    direction: str | None = None
    coherent_donors: bool = False


@dataclass
class GridSection:
    start: float = 0.0
    stop: float = 1.0
    step: float = 0.05


@dataclass
class SimulationSection:
    scenario: int | None = None
    imbalance: str | None = None
    true_hr: float | None = None
    gamma: float | None = None
    n: int | None = None
    lam: float | None = None
    covariate_log_hr: float | None = None
    t_max: float | None = None
    n_trials: int | None = None
    censoring_scale: float | None = None
    trial: int = 0


@dataclass
class OutputSection:
    dataset_csv: str | None = None
    sweep_csv: str | None = None
    km_csv: str | None = None
    km_svg: str | None = None
    table_csv: str | None = None


@dataclass
class RunConfig:
    seed: int = 0
    workers: int = 1
    dataset: str | None = None
    cutoff: float | None = None
    criterion: str = "upper-ci"
    tolerance: float = 0.0
    selection: SelectionSection = field(default_factory=SelectionSection)
    imputation: ImputationSection = field(default_factory=ImputationSection)
    grid: object = None
    simulation: SimulationSection = field(default_factory=SimulationSection)
    output: OutputSection = field(default_factory=OutputSection)

    _SECTIONS = {"selection": SelectionSection, "imputation": ImputationSection,
                 "simulation": SimulationSection, "output": OutputSection}

    @classmethod
    def from_mapping(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        kwargs = {}
        known = {f.name for f in fields(cls)}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if key in cls._SECTIONS:
                value = _section(cls._SECTIONS[key], value, key)
            elif key == "grid":
                value = _grid(value)
            kwargs[key] = value
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_mapping(data)

    def validate(self):
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers must be a positive integer")
        # Build the typed objects once to surface errors before any computation.
        self.selection_criteria()
        self.criterion_enum()
        if self.grid is not None:
            self.grid_values()
        if any(v is not None for k, v in vars(self.simulation).items() if k != "trial"):
            self.simulation_config()

    def selection_criteria(self):
        s = self.selection
        try:
            return SelectionCriteria(_arm(s.target_arm), frozenset(s.reasons), s.early_window)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"selection: {exc}") from None

    def criterion_enum(self):
        try:
            return Criterion(self.criterion)
        except ValueError:
            raise ConfigError(f"criterion must be one of {[c.value for c in Criterion]}") from None

    def imputation_spec(self, sensitivity=None):
        imp = self.imputation
        try:
            method = Method(imp.method)
        except ValueError:
            raise ConfigError(f"imputation.method must be one of {[m.value for m in Method]}") from None
        if sensitivity is None:
            sensitivity = 1.0 if method.model_based else 0.0
        try:
            return ImputationSpec(method, self.selection_criteria(), sensitivity, imp.m, self.seed,
                                  Direction(imp.direction) if imp.direction else None,
                                  bool(imp.coherent_donors))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"imputation: {exc}") from None

    def grid_values(self):
        g = self.grid
        if g is None:
            g = GridSection()
        if isinstance(g, GridSection):
            if not g.step > 0:
                raise ConfigError("grid.step must be positive")
            n = int(math.floor((g.stop - g.start) / g.step + 1e-9)) + 1
            if n < 1:
                raise ConfigError("grid.stop must not be below grid.start")
            return [round(g.start + i * g.step, 12) for i in range(n)]
        return [float(v) for v in g]

    def simulation_config(self):
        s = self.simulation
        overrides = {k: v for k, v in vars(s).items()
                     if v is not None and k not in ("scenario", "imbalance", "trial")}
        overrides["seed"] = self.seed
        try:
            if s.scenario is not None:
                return scenario_config(int(s.scenario), **overrides)
            if s.imbalance is not None:
                overrides["scenario"] = Scenario(s.imbalance)
            return SimulationConfig(**overrides)
        except KeyError:
            raise ConfigError(f"simulation.scenario must be 1-20, got {s.scenario}") from None
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"simulation: {exc}") from None


def _section(cls, value, name):
    if not isinstance(value, dict):
        raise ConfigError(f"{name} must be an object")
    known = {f.name for f in fields(cls)}
    for key in value:
        if key not in known:
            raise ConfigError(f"unknown key {name}.{key}")
    return cls(**value)


def _grid(value):
    if isinstance(value, list):
        if not all(isinstance(v, (int, float)) for v in value):
            raise ConfigError("grid list must contain numbers")
        return [float(v) for v in value]
    return _section(GridSection, value, "grid")


def _arm(value):
    if isinstance(value, str):
        try:
            return Arm[value.upper()]
        except KeyError:
            raise ValueError(f"target_arm must be 'control' or 'experimental', got {value!r}") from None
    return Arm(value)


def default_grid(method, arm):
    """Grids used when none is configured."""
    method = Method(method)
    if method.model_based:
        if Arm(arm) is Arm.CONTROL:
            return [float(v) for v in np.round(np.arange(0.05, 1.0001, 0.05), 2)]
        return [float(v) for v in np.round(np.arange(1.0, 3.0001, 0.05), 2)]
    if method is Method.DONOR:
        return [float(v) for v in np.round(np.arange(0.2, 1.0001, 0.05), 2)]
    return [float(v) for v in np.round(np.arange(0.0, 1.0001, 0.05), 2)]
