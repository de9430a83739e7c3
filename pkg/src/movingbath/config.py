"""Experiment configuration: YAML/JSON files plus command-line overrides.

Schema (all keys optional except where an experiment needs them)::

    experiment: fig1 | fig2 | fig4 | sweep | selftest
    system: delta | battery | two_level            # preset name, or
    system: {preset: delta, omega10: 1.0, omega21: 3.1}
    system: {energies: [...], coupling: [[...], ...]}
    beta_grid: [0.1, 1.0, 10.0]                    # explicit list, or
    beta_grid: {start: 0.05, stop: 50, num: 40, spacing: log}
    u_list: [0.2, 0.6, 0.99]
    lambda: 0.1
    seed: 7                                        # enables Gillespie columns in fig2
    gillespie: {n_traj: 200, tau_lambda2: 1000.0}
    workers: 1
    output: results.csv
    format: csv | json
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np
import yaml

from .system import PRESETS, LevelSystem

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "EXPERIMENTS",
    "DEFAULT_BETA_GRID",
    "DEFAULT_U_LIST",
    "DEFAULT_LAMBDA",
    "parse_beta_grid",
    "load_config",
]

EXPERIMENTS = ("fig1", "fig2", "fig4", "sweep", "selftest")
DEFAULT_BETA_GRID = {"start": 0.05, "stop": 50.0, "num": 40, "spacing": "log"}
DEFAULT_U_LIST = (0.2, 0.6, 0.99)
DEFAULT_LAMBDA = 0.1
_DEFAULT_SYSTEM = {"fig1": "delta", "fig2": "delta", "fig4": "battery", "sweep": "delta", "selftest": "delta"}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field."""


def parse_beta_grid(spec) -> tuple[float, ...]:
    """Accept a list, a ``{start, stop, num, spacing}`` mapping, ``"a:b:n"`` or ``"x,y,z"``."""
    if isinstance(spec, str):
        text = spec.strip()
        if ":" in text:
            parts = text.split(":")
            if len(parts) not in (3, 4):
                raise ConfigError(f"beta_grid: range must be start:stop:num[:log|linear], got {spec!r}")
            spec = {"start": parts[0], "stop": parts[1], "num": parts[2]}
            if len(parts) == 4:
                spec["spacing"] = parts[3]
        else:
            spec = [s for s in text.split(",") if s.strip()]
    if isinstance(spec, Mapping):
        try:
            start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
        except KeyError as exc:
            raise ConfigError(f"beta_grid: missing key {exc.args[0]!r}") from None
        except (TypeError, ValueError):
            raise ConfigError(f"beta_grid: start/stop/num must be numbers, got {dict(spec)!r}") from None
        spacing = spec.get("spacing", "log")
        if num < 1:
            raise ConfigError("beta_grid: num must be at least 1")
        if spacing == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError("beta_grid: log spacing needs positive start and stop")
            values = np.geomspace(start, stop, num)
        elif spacing == "linear":
            values = np.linspace(start, stop, num)
        else:
            raise ConfigError(f"beta_grid: spacing must be 'log' or 'linear', got {spacing!r}")
    else:
        try:
            values = np.asarray([float(v) for v in spec], dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(f"beta_grid: expected a list of numbers, got {spec!r}") from None
    if values.size == 0:
        raise ConfigError("beta_grid: grid is empty")
    if np.any(~(values > 0)) or np.any(~np.isfinite(values)):
        raise ConfigError("beta_grid: all inverse temperatures must be positive and finite")
    return tuple(float(v) for v in values)


def _parse_u_list(spec) -> tuple[float, ...]:
    if isinstance(spec, str):
        spec = [s for s in spec.split(",") if s.strip()]
    if isinstance(spec, (int, float)):
        spec = [spec]
    try:
        values = tuple(float(v) for v in spec)
    except (TypeError, ValueError):
        raise ConfigError(f"u_list: expected a list of velocities, got {spec!r}") from None
    if not values:
        raise ConfigError("u_list: list is empty")
    bad = [v for v in values if not 0.0 <= v < 1.0]
    if bad:
        raise ConfigError(f"u_list: velocities must lie in [0, 1), got {bad}")
    return values


def _parse_system(spec) -> LevelSystem:
    if isinstance(spec, LevelSystem):
        return spec
    if isinstance(spec, str):
        spec = {"preset": spec}
    if not isinstance(spec, Mapping):
        raise ConfigError(f"system: expected a preset name or mapping, got {spec!r}")
    try:
        if "preset" in spec:
            name = spec["preset"]
            if name not in PRESETS:
                raise ConfigError(f"system: unknown preset {name!r}; choose from {sorted(PRESETS)}")
            kwargs = {k: v for k, v in spec.items() if k != "preset"}
            return PRESETS[name](**kwargs)
        return LevelSystem.from_dict(spec)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"system: {exc}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    system: LevelSystem
    beta_grid: tuple[float, ...]
    u_list: tuple[float, ...] = DEFAULT_U_LIST
    lam: float = DEFAULT_LAMBDA
    seed: Optional[int] = None
    gillespie_traj: int = 200
    gillespie_tau_lambda2: float = 1000.0
    workers: int = 1
    output: Optional[str] = None
    format: str = "csv"
    source: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        data = dict(data or {})
        known = {
            "experiment", "system", "beta_grid", "u_list", "lambda", "seed",
            "gillespie", "workers", "output", "format",
        }
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown configuration field")
        experiment = data.get("experiment")
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: must be one of {list(EXPERIMENTS)}, got {experiment!r}")
        system = _parse_system(data.get("system", _DEFAULT_SYSTEM[experiment]))
        beta_grid = parse_beta_grid(data.get("beta_grid", DEFAULT_BETA_GRID))
        u_list = _parse_u_list(data.get("u_list", DEFAULT_U_LIST))
        try:
            lam = float(data.get("lambda", DEFAULT_LAMBDA))
        except (TypeError, ValueError):
            raise ConfigError(f"lambda: expected a number, got {data.get('lambda')!r}") from None
        if not lam > 0:
            raise ConfigError("lambda: coupling must be positive")
        seed = data.get("seed")
        if seed is not None:
            if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
                raise ConfigError(f"seed: expected a non-negative integer, got {seed!r}")
            seed = int(seed)
        gil = data.get("gillespie") or {}
        if not isinstance(gil, Mapping):
            raise ConfigError("gillespie: expected a mapping with n_traj and tau_lambda2")
        try:
            n_traj = int(gil.get("n_traj", 200))
            tau_l2 = float(gil.get("tau_lambda2", 1000.0))
        except (TypeError, ValueError):
            raise ConfigError("gillespie: n_traj and tau_lambda2 must be numbers") from None
        if n_traj < 2 or not tau_l2 > 0:
            raise ConfigError("gillespie: need n_traj >= 2 and tau_lambda2 > 0")
        workers = data.get("workers", 1)
        if not isinstance(workers, int) or workers < 1:
            raise ConfigError(f"workers: expected a positive integer, got {workers!r}")
        fmt = data.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError(f"format: must be 'csv' or 'json', got {fmt!r}")
        output = data.get("output")
        return cls(
            experiment=experiment,
            system=system,
            beta_grid=beta_grid,
            u_list=u_list,
            lam=lam,
            seed=seed,
            gillespie_traj=n_traj,
            gillespie_tau_lambda2=tau_l2,
            workers=workers,
            output=None if output is None else str(output),
            format=fmt,
            source=data,
        )

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def describe(self) -> dict[str, Any]:
        """Normalised, JSON-serialisable view used in output metadata."""
        return {
            "experiment": self.experiment,
            "system": self.system.to_dict(),
            "beta_grid": list(self.beta_grid),
            "u_list": list(self.u_list),
            "lambda": self.lam,
            "seed": self.seed,
            "gillespie": {"n_traj": self.gillespie_traj, "tau_lambda2": self.gillespie_tau_lambda2},
        }


def load_config(path, overrides: Mapping[str, Any] | None = None) -> ExperimentConfig:
    """Read a YAML (or JSON) config file and apply ``overrides`` on top."""
    data: dict[str, Any] = {}
    if path is not None:
        text = Path(path).read_text()
        loaded = yaml.safe_load(text)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, Mapping):
            raise ConfigError(f"{path}: top level must be a mapping")
        data.update(loaded)
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return ExperimentConfig.from_mapping(data)
