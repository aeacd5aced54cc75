"""Experiment configuration loaded from a single JSON document."""

from __future__ import annotations

import hashlib
import json
from dataclasses import MISSING, asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any

from .engine import CostParams
from .model import BenchmarkParams, DelayDist, TimeGrid
from .partition import SCHEMES

EXPERIMENTS = ("weak_scaling", "cv_area_sweep", "cv_rate_sweep", "d_sweep", "theory_check", "access_check", "single_run")
DEFAULT_SEEDS = (12, 654, 91856)


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class NetworkConfig:
    n_areas: int = 8
    neurons_per_area: int = 200
    k_intra: int = 20
    k_inter: int = 20
    h_steps_per_ms: int = 10
    d_min_steps: int = 1
    d_min_inter_steps: int = 10
    T_model_steps: int = 200
    intra_delay: DelayDist = field(default_factory=lambda: DelayDist(1.25, 0.625))
    inter_delay: DelayDist = field(default_factory=lambda: DelayDist(5.0, 2.5))
    rate_hz: float = 50.0
    cv_area_size: float = 0.0
    cv_rate: float = 0.0

    def benchmark_params(self, seed: int) -> BenchmarkParams:
        grid = TimeGrid(self.h_steps_per_ms, self.d_min_steps, self.d_min_inter_steps, self.T_model_steps)
        return BenchmarkParams(
            n_areas=self.n_areas, neurons_per_area=self.neurons_per_area,
            k_intra=self.k_intra, k_inter=self.k_inter, grid=grid,
            intra_delay=self.intra_delay, inter_delay=self.inter_delay,
            rate_hz=self.rate_hz, rng_seed=seed,
        )


@dataclass
class PartitionConfig:
    threads_per_rank: int = 2
    schemes: list[str] = field(default_factory=lambda: list(SCHEMES))


@dataclass
class EngineConfig:
    initial_capacity: int = 64
    id_bytes: int = 4
    offset_bytes: int = 1
    workers: int = 1


@dataclass
class ExchangeCost:
    """Affine per-call cost used only for reported exchange-time estimates."""

    alpha_per_call: float = 0.0
    beta_per_byte: float = 0.0


@dataclass
class TheoryConfig:
    mu: float = 1.0
    sigma: float = 0.1
    S: int = 10_000
    M: list[int] = field(default_factory=lambda: [32, 64, 128])
    D: list[int] = field(default_factory=lambda: [1, 2, 5, 10])
    rho: float = 0.0
    replicates: int = 20
    tail_mass: float = 0.035
    max_cycles: int = 100_000
    xi_replicates: int = 200_000


@dataclass
class AccessConfig:
    M: list[int] = field(default_factory=lambda: [2, 4, 8])
    T_M: list[int] = field(default_factory=lambda: [2])
    engine_check: bool = True


@dataclass
class ExperimentConfig:
    experiment: str = "single_run"
    network: NetworkConfig = field(default_factory=NetworkConfig)
    partition: PartitionConfig = field(default_factory=PartitionConfig)
    engine: EngineConfig = field(default_factory=EngineConfig)
    cost_params: CostParams = field(default_factory=CostParams)
    exchange_cost: ExchangeCost = field(default_factory=ExchangeCost)
    sweep: list[float] = field(default_factory=list)
    theory: TheoryConfig = field(default_factory=TheoryConfig)
    access: AccessConfig = field(default_factory=AccessConfig)
    seeds: list[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    output_dir: str = "out"

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def digest(self) -> str:
        doc = self.to_dict()
        doc.pop("output_dir")
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


def _default(f):
    if f.default is not MISSING:
        return f.default
    if f.default_factory is not MISSING:
        return f.default_factory()
    return None


def _build(cls, doc: Any, path: str):
    if not isinstance(doc, dict):
        raise ConfigError(path, f"expected an object, got {type(doc).__name__}")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in doc.items():
        sub = f"{path}.{key}" if path else key
        if key not in known:
            raise ConfigError(sub, f"unknown key (allowed: {', '.join(sorted(known))})")
        default = _default(known[key])
        if is_dataclass(default):
            kwargs[key] = _build(type(default), value, sub)
        elif isinstance(default, list):
            if not isinstance(value, list):
                raise ConfigError(sub, "expected a list")
            kwargs[key] = value
        elif isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(sub, "expected true/false")
            kwargs[key] = value
        elif default is None or isinstance(default, (int, float)):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(sub, f"expected a number, got {value!r}")
            if default is None:
                kwargs[key] = value
                continue
            if isinstance(default, int) and not isinstance(default, bool) and int(value) != value:
                raise ConfigError(sub, f"expected an integer, got {value!r}")
            kwargs[key] = type(default)(value)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path or "<root>", str(exc)) from None


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {cfg.experiment!r} (one of {', '.join(EXPERIMENTS)})")
    if not cfg.seeds:
        raise ConfigError("seeds", "must not be empty")
    if any(not isinstance(s, int) or isinstance(s, bool) for s in cfg.seeds):
        raise ConfigError("seeds", "seeds must be integers")
    for s in cfg.partition.schemes:
        if s not in SCHEMES:
            raise ConfigError("partition.schemes", f"unknown scheme {s!r}")
    if not cfg.partition.schemes:
        raise ConfigError("partition.schemes", "must not be empty")
    if cfg.experiment in ("weak_scaling", "cv_area_sweep", "cv_rate_sweep", "d_sweep") and not cfg.sweep:
        raise ConfigError("sweep", f"experiment {cfg.experiment} needs a nonempty sweep grid")
    if cfg.experiment in ("weak_scaling", "d_sweep") and any(int(v) != v or v < 1 for v in cfg.sweep):
        raise ConfigError("sweep", "values must be positive integers for this experiment")
    if cfg.experiment in ("cv_area_sweep", "cv_rate_sweep") and any(v < 0 for v in cfg.sweep):
        raise ConfigError("sweep", "coefficients of variation must be >= 0")
    if cfg.experiment == "theory_check" and (not cfg.theory.M or not cfg.theory.D):
        raise ConfigError("theory", "M and D grids must be nonempty")
    if cfg.experiment == "access_check" and (not cfg.access.M or not cfg.access.T_M):
        raise ConfigError("access", "M and T_M grids must be nonempty")
    if cfg.partition.threads_per_rank < 1:
        raise ConfigError("partition.threads_per_rank", "must be >= 1")
    try:
        cfg.network.benchmark_params(0).grid
    except ValueError as exc:
        raise ConfigError("network", str(exc)) from None
    if cfg.experiment == "d_sweep":
        n = cfg.network
        for D in cfg.sweep:
            if n.T_model_steps % (int(D) * n.d_min_steps):
                raise ConfigError("sweep", f"T_model_steps={n.T_model_steps} is not a multiple of D*d_min_steps for D={D}")
    return cfg


def from_dict(doc: dict[str, Any]) -> ExperimentConfig:
    return validate(_build(ExperimentConfig, doc, ""))


def load(path: str | Path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    return from_dict(doc)
