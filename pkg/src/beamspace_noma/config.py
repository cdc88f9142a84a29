"""Experiment configuration: defaults, flat key=value config files, CLI parsing."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .channel import ChannelParams
from .power import OptimizerConfig
from .rates import LinkBudget, PowerModel

ALL_SCHEMES = ("noma", "oma", "beamspace_mimo", "fully_digital")
VARIANTS = ("strongest", "svd")


@dataclass
class SystemConfig:
    """Every scenario constant of one experiment run."""

    n_antennas: int = 256
    n_users: int = 32
    n_nlos: int = 2
    total_power_mw: float = 32.0
    los_variance: float = 1.0
    nlos_variance: float = 0.1
    snr_db: list[float] = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])
    users_sweep: list[int] = field(default_factory=lambda: [8, 16, 24, 32])
    trials: int = 200
    seed: int = 1
    max_iters: int = 20
    min_rate: float = 0.0
    rf_chain_mw: float = 300.0
    switch_mw: float = 5.0
    baseband_mw: float = 200.0
    schemes: list[str] = field(default_factory=lambda: list(ALL_SCHEMES))
    variant: str = "strongest"
    out: str = "results"
    workers: int = 1

    def __post_init__(self):
        if not self.snr_db:
            raise ValueError("SNR sweep must be non-empty")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        unknown = [s for s in self.schemes if s not in ALL_SCHEMES]
        if unknown:
            raise ValueError(f"unknown schemes {unknown}; expected subset of {ALL_SCHEMES}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def channel_params(self, n_users: int | None = None) -> ChannelParams:
        return ChannelParams(n_antennas=self.n_antennas,
                             n_users=self.n_users if n_users is None else n_users,
                             n_nlos=self.n_nlos, los_var=self.los_variance,
                             nlos_var=self.nlos_variance)

    def budget(self, snr_db: float) -> LinkBudget:
        return LinkBudget.from_snr(self.total_power_mw, snr_db, self.n_users)

    def power_model(self) -> PowerModel:
        return PowerModel(rf_chain_mw=self.rf_chain_mw, switch_mw=self.switch_mw,
                          baseband_mw=self.baseband_mw)

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(max_iters=self.max_iters, min_rate=self.min_rate)

    def with_users(self, n_users: int) -> "SystemConfig":
        return replace(self, n_users=n_users)


def parse_snr_spec(spec: str) -> list[float]:
    """Parse 'start:stop:step' (inclusive stop) or a comma list of dB points."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"SNR spec must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError(f"SNR step must be > 0, got {step}")
        return [float(v) for v in np.arange(start, stop + step / 2.0, step)]
    return [float(p) for p in spec.split(",") if p.strip()]


def parse_int_list(spec: str) -> list[int]:
    return [int(p) for p in spec.split(",") if p.strip()]


def parse_schemes(spec: str) -> list[str]:
    return [p.strip() for p in spec.split(",") if p.strip()]


_PARSERS = {
    "n_antennas": int, "n_users": int, "n_nlos": int, "trials": int,
    "seed": int, "max_iters": int, "workers": int,
    "total_power_mw": float, "los_variance": float, "nlos_variance": float,
    "min_rate": float, "rf_chain_mw": float, "switch_mw": float, "baseband_mw": float,
    "snr_db": parse_snr_spec, "users_sweep": parse_int_list, "schemes": parse_schemes,
    "variant": str.strip, "out": str.strip,
}


def load_config_file(path: str) -> dict:
    """Read a flat key = value config file into typed SystemConfig fields.

    Blank lines and '#' comments are ignored; unknown keys are an error.
    """
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _PARSERS:
                known = ", ".join(sorted(_PARSERS))
                raise ValueError(f"{path}:{lineno}: unknown key {key!r} (known: {known})")
            values[key] = _PARSERS[key](value.strip())
    return values


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> SystemConfig:
    """Defaults, then config-file values, then explicit overrides (CLI flags)."""
    merged: dict = {}
    merged.update(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    valid = {f.name for f in fields(SystemConfig)}
    unknown = set(merged) - valid
    if unknown:
        raise ValueError(f"unknown config fields {sorted(unknown)}")
    return SystemConfig(**merged)
