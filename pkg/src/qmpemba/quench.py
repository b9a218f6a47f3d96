"""Quench runs: evolve an initial product state and sample the witnesses."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from . import models
from .initial_states import floquet_initial, mfi_initial, mfi_phase
from .models import FloquetParams, MFIParams
from .observables import witnesses
from .statevector import MAX_SUBSYSTEM, QuantumState, new_product_state, reduced_density_matrix

WITNESS_COLUMNS = ("step", "t", "D_A", "dS_A", "asym", "q_mean", "q2_mean", "norm_err")
MAX_SITES = 26


class ConfigError(ValueError):
    """Invalid run configuration; ``errors`` maps field names to messages."""

    def __init__(self, errors: dict[str, str]):
        self.errors = dict(errors)
        super().__init__("; ".join(f"{k}: {v}" for k, v in self.errors.items()))


@dataclass(frozen=True)
class QuenchConfig:
    model: str = "floquet"
    N: int = 12
    l: int = 3
    floquet: FloquetParams = field(default_factory=FloquetParams)
    mfi: MFIParams = field(default_factory=MFIParams)
    a: float = 0.0
    theta: float = math.pi / 2
    t_max: float = 100.0
    sample_every: Optional[int] = None
    subsystem_start: int = 0
    seed: int = 0
    output: str = "runs/quench"

    def __post_init__(self):
        errors = {}
        if self.model not in ("floquet", "mfi"):
            errors["model"] = f"must be 'floquet' or 'mfi', got {self.model!r}"
        if not isinstance(self.N, int) or self.N < 2 or self.N % 2 or self.N > MAX_SITES:
            errors["N"] = f"must be an even integer in [2, {MAX_SITES}], got {self.N!r}"
        upper = min(MAX_SUBSYSTEM, self.N - 1) if isinstance(self.N, int) else MAX_SUBSYSTEM
        if not isinstance(self.l, int) or not 1 <= self.l <= upper:
            errors["l"] = f"must satisfy 1 <= l <= {upper}, got {self.l!r}"
        if not (isinstance(self.t_max, (int, float)) and math.isfinite(self.t_max) and self.t_max >= 0):
            errors["t_max"] = f"must be finite and >= 0, got {self.t_max!r}"
        if self.sample_every is not None and (not isinstance(self.sample_every, int) or self.sample_every < 1):
            errors["sample_every"] = f"must be a positive integer, got {self.sample_every!r}"
        if isinstance(self.N, int) and not 0 <= self.subsystem_start < max(self.N, 1):
            errors["subsystem_start"] = f"must lie in [0, N), got {self.subsystem_start!r}"
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            errors["seed"] = f"must be a 64-bit unsigned integer, got {self.seed!r}"
        if self.model == "floquet" and isinstance(self.N, int) and self.N < models.FLOQUET_MIN_SITES:
            errors["N"] = f"Floquet model needs N >= {models.FLOQUET_MIN_SITES}, got {self.N}"
        if self.model == "floquet" and not 0.0 <= self.a <= 1.0:
            errors["a"] = f"must lie in [0, 1], got {self.a!r}"
        if self.model == "mfi":
            if not self.mfi.dt > 0:
                errors["mfi.dt"] = f"must be positive, got {self.mfi.dt!r}"
            try:
                mfi_phase(self.theta, self.mfi)
            except ValueError as exc:
                errors["theta"] = str(exc)
        if errors:
            raise ConfigError(errors)

    @property
    def cadence(self) -> int:
        if self.sample_every is not None:
            return self.sample_every
        if self.model == "mfi":
            return max(1, int(round(0.5 / self.mfi.dt)))
        return 1

    @property
    def n_steps(self) -> int:
        if self.model == "floquet":
            return int(round(self.t_max))
        return int(round(self.t_max / self.mfi.dt))

    def step_time(self, step: int) -> float:
        return float(step) if self.model == "floquet" else step * self.mfi.dt

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "QuenchConfig":
        data = dict(data)
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError({k: "unknown field" for k in sorted(unknown)})
        try:
            if isinstance(data.get("floquet"), dict):
                data["floquet"] = FloquetParams(**data["floquet"])
            if isinstance(data.get("mfi"), dict):
                data["mfi"] = MFIParams(**data["mfi"])
        except (TypeError, ValueError) as exc:
            raise ConfigError({"params": str(exc)}) from exc
        return cls(**data)

    def with_updates(self, **changes) -> "QuenchConfig":
        return replace(self, **changes)


@dataclass
class WitnessSeries:
    config: QuenchConfig
    rows: list[tuple] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        idx = WITNESS_COLUMNS.index(name)
        return np.array([r[idx] for r in self.rows], dtype=float)


def initial_state(cfg: QuenchConfig) -> QuantumState:
    if cfg.model == "floquet":
        angles = floquet_initial(cfg.N, cfg.a)
    else:
        angles = mfi_initial(cfg.N, cfg.theta, cfg.mfi)
    return new_product_state(angles)


def _charge(state: QuantumState, cfg: QuenchConfig) -> tuple[float, float]:
    if cfg.model == "floquet":
        return models.total_magnetization(state)
    return models.mfi_energy_moments(state, cfg.mfi)


def sample(state: QuantumState, cfg: QuenchConfig, step: int) -> tuple:
    rho = reduced_density_matrix(state, cfg.subsystem_start, cfg.l)
    w = witnesses(rho)
    q1, q2 = _charge(state, cfg)
    return (step, cfg.step_time(step), w.D_A, w.dS_A, w.asym, q1, q2, state.norm_error())


def run_quench(cfg: QuenchConfig) -> WitnessSeries:
    """Evolve from the configured initial state, sampling every ``cfg.cadence`` steps."""
    state = initial_state(cfg)
    series = WitnessSeries(cfg)
    series.rows.append(sample(state, cfg, 0))
    step = 0
    cadence = cfg.cadence
    total = cfg.n_steps
    while step < total:
        chunk = min(cadence, total - step)
        if cfg.model == "floquet":
            for _ in range(chunk):
                models.floquet_step(state, cfg.floquet)
        else:
            models.mfi_evolve(state, cfg.mfi, chunk)
        step += chunk
        series.rows.append(sample(state, cfg, step))
    return series
