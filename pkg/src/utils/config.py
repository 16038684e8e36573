"""
Configuration Management
Validated run configuration (JSON) and environment settings for raftsim.
"""

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from constants import (
    DEFAULT_DAMPING,
    DEFAULT_POLISH_EVERY,
    DEFAULT_STATIONARY_MAX_ITERS,
    DEFAULT_STATIONARY_TOL,
    MIN_SMALL_PARAMETER,
    REFERENCE_EXCHANGE,
    REFERENCE_GEOMETRY,
    REFERENCE_INITIAL,
    REFERENCE_MODEL,
)
from .exceptions import ConfigurationException

load_dotenv()


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GeometryConfig(_Strict):
    """Torus side L, grid N, slab depth H and vertical modes Mz."""
    L: float = Field(REFERENCE_GEOMETRY["L"], gt=0)
    N: int = Field(REFERENCE_GEOMETRY["N"], ge=4)
    H: float = Field(REFERENCE_GEOMETRY["H"], gt=0)
    Mz: int = Field(REFERENCE_GEOMETRY["Mz"], ge=2)

    @field_validator("N")
    @classmethod
    def _even(cls, value: int) -> int:
        if value % 2 != 0:
            raise ValueError("N must be even")
        return value


class ModelConfig(_Strict):
    eps: float = Field(REFERENCE_MODEL["eps"], ge=MIN_SMALL_PARAMETER)
    delta: float = Field(REFERENCE_MODEL["delta"], ge=MIN_SMALL_PARAMETER)
    D: float = Field(REFERENCE_MODEL["D"], gt=0)
    dt: float = Field(REFERENCE_MODEL["dt"], gt=0)
    s_stab: Optional[float] = Field(None, ge=0)
    t_end: float = Field(REFERENCE_MODEL["t_end"], gt=0)


class ExchangeConfig(_Strict):
    kind: Literal["equilibrium", "noneq", "noneq_cutoff"] = "noneq"
    c: float = Field(REFERENCE_EXCHANGE["c"], ge=0)
    c1: float = Field(REFERENCE_EXCHANGE["c1"], gt=0)
    c2: float = Field(REFERENCE_EXCHANGE["c2"], gt=0)
    cutoff: Optional[float] = Field(None, ge=0)
    blend_width: Optional[float] = Field(None, gt=0)


class InitialConfig(_Strict):
    """Initial data: phase mean plus seeded perturbation, masses and u(0)."""
    phi_mean: float = REFERENCE_INITIAL["phi_mean"]
    mass_total: float = REFERENCE_INITIAL["mass_total"]
    u0: float = REFERENCE_INITIAL["u0"]
    noise: float = Field(REFERENCE_INITIAL["noise"], ge=0)
    seed: int = Field(REFERENCE_INITIAL["seed"], ge=0, lt=2 ** 64)
    profile: Literal["noise", "smooth"] = "noise"
    snapshot: Optional[str] = None


class OutputConfig(_Strict):
    out_dir: str = "results"
    csv_every: int = Field(10, ge=1)
    snapshot_every: int = Field(1000, ge=1)
    pgm: bool = False


class StationaryOptions(_Strict):
    damping: float = Field(DEFAULT_DAMPING, gt=0, le=1)
    tol: float = Field(DEFAULT_STATIONARY_TOL, gt=0)
    max_iters: int = Field(DEFAULT_STATIONARY_MAX_ITERS, ge=1)
    continuation_steps: int = Field(0, ge=0)
    polish_every: int = Field(DEFAULT_POLISH_EVERY, ge=0)


class SweepOptions(_Strict):
    D_list: List[float] = Field(default_factory=lambda: [1.0, 4.0, 16.0, 64.0])
    deltas: List[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05])
    N_list: List[int] = Field(default_factory=lambda: [32, 48, 64])
    dt_list: List[float] = Field(default_factory=lambda: [4e-4, 2e-4, 1e-4])


class RunConfig(_Strict):
    """Top-level run configuration, loaded from JSON."""
    model: Literal["full", "reduced", "ok", "stationary"] = "reduced"
    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    params: ModelConfig = Field(default_factory=ModelConfig)
    exchange: ExchangeConfig = Field(default_factory=ExchangeConfig)
    initial: InitialConfig = Field(default_factory=InitialConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    stationary: StationaryOptions = Field(default_factory=StationaryOptions)
    sweeps: SweepOptions = Field(default_factory=SweepOptions)

    def to_geometry(self):
        from spectral_core import SlabGeometry, TorusGeometry
        g = self.geometry
        return SlabGeometry(base=TorusGeometry(L=g.L, N=g.N), H=g.H, Mz=g.Mz)

    def to_params(self):
        from dynamics_full import ModelParams
        m = self.params
        return ModelParams(eps=m.eps, delta=m.delta, D=m.D, dt=m.dt, s_stab=m.s_stab, t_end=m.t_end)

    def to_law(self):
        from exchange import ExchangeLaw
        x = self.exchange
        if x.kind == "equilibrium":
            return ExchangeLaw.equilibrium(x.c)
        if x.kind == "noneq":
            return ExchangeLaw.noneq(x.c1, x.c2)
        g = self.geometry
        level = x.cutoff if x.cutoff is not None else self.initial.mass_total / (g.L * g.L * g.H)
        return ExchangeLaw.noneq_cutoff(x.c1, x.c2, level, x.blend_width)


def _format_errors(exc: ValidationError) -> List[str]:
    return [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()]


def parse_config(data: Union[dict, str]) -> RunConfig:
    """Validate a dict or JSON string into a RunConfig."""
    try:
        if isinstance(data, str):
            return RunConfig.model_validate_json(data)
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        errors = _format_errors(exc)
        raise ConfigurationException("Invalid run configuration: " + "; ".join(errors), errors)


def load_config(path: Union[str, Path]) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationException(f"Cannot read config {path}: {exc}")
    try:
        json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationException(f"Config {path} is not valid JSON: {exc}")
    return parse_config(text)


def dump_config(config: RunConfig, path: Optional[Union[str, Path]] = None) -> str:
    text = json.dumps(config.model_dump(), indent=2)
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text


@dataclass
class Settings:
    """Process-level settings from the environment."""
    log_level: str = "INFO"
    threads: int = 1


def get_settings() -> Settings:
    """
    Get settings from environment or defaults.

    Returns:
        Settings instance
    """
    raw = os.getenv("RAFTSIM_THREADS")
    threads = os.cpu_count() or 1
    if raw:
        try:
            threads = int(raw)
        except ValueError:
            raise ConfigurationException(f"RAFTSIM_THREADS must be an integer, got '{raw}'")
        if threads < 1:
            raise ConfigurationException("RAFTSIM_THREADS must be >= 1")
    return Settings(log_level=os.getenv("LOG_LEVEL", "INFO"), threads=threads)
