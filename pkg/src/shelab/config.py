"""Experiment configuration: flat key = value files with section headers,
overridable from the command line.  Every resolved value is echoed into the
manifest so reruns are diffable."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

from .errors import ConfigurationError


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in str(text).replace(",", " ").split())


@dataclass
class ExperimentConfig:
    experiment: str = ""
    seed: int = 7
    replicas: int = 100
    dx: float = 0.1
    dt: float = 0.01
    kernel_radius_sigmas: float = 6.0
    half_width: float = 0.0  # 0 means: derive from the margin rule
    lambdas: tuple[float, ...] = (0.5,)
    depths: tuple[float, ...] = (-50.0,)
    horizon: float = 1.0
    mu: float = 1.0
    band: float = 0.1
    epsilons: tuple[float, ...] = (0.05, 0.02)
    dx_ladder: tuple[float, ...] = (0.2, 0.1, 0.05)
    out_dir: str = "reports"
    workers: int = 1
    persist_noise: bool = False

    def override(self, **kwargs) -> "ExperimentConfig":
        known = {f.name for f in fields(self)}
        for key, value in kwargs.items():
            if value is None:
                continue
            if key not in known:
                raise ConfigurationError(f"unknown configuration key '{key}'")
            current = getattr(self, key)
            if isinstance(current, tuple):
                value = _parse_floats(value) if isinstance(value, str) else tuple(value)
            elif isinstance(current, bool):
                value = value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                value = int(value)
            elif isinstance(current, float):
                value = float(value)
            setattr(self, key, value)
        return self

    def as_manifest(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


def load_config(path: str) -> ExperimentConfig:
    """Read a config file: [section] headers group flat key = value lines;
    section names are organizational only."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigurationError(f"cannot read config file {path}")
    cfg = ExperimentConfig()
    flat: dict[str, str] = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            flat[key] = value
    try:
        cfg.override(**flat)
    except (ValueError, TypeError) as exc:
        raise ConfigurationError(f"bad config value: {exc}") from exc
    return cfg
