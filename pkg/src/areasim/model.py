"""Multi-area benchmark networks built from ignore-and-fire neurons.

Neurons and synapses are stored column-wise in numpy arrays. Global neuron
ids are contiguous and ordered by area. Delays are integer simulation steps.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

#: ``fire_interval_steps`` value for neurons that never fire (rate 0).
NEVER = 0

_STREAM_AREA_SIZES = 1
_STREAM_AREA_RATES = 2
_STREAM_AREA_NEURONS = 3


@dataclass(frozen=True)
class TimeGrid:
    h_steps_per_ms: int = 10
    d_min_steps: int = 1
    d_min_inter_steps: int = 10
    T_model_steps: int = 1000

    def __post_init__(self):
        for name in ("h_steps_per_ms", "d_min_steps", "d_min_inter_steps", "T_model_steps"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.d_min_inter_steps % self.d_min_steps:
            raise ValueError(
                f"d_min_inter_steps={self.d_min_inter_steps} is not a multiple of "
                f"d_min_steps={self.d_min_steps}"
            )
        if self.T_model_steps % self.d_min_inter_steps:
            raise ValueError(
                f"T_model_steps={self.T_model_steps} must be a multiple of "
                f"d_min_inter_steps={self.d_min_inter_steps}"
            )

    @property
    def D(self) -> int:
        """Ratio of the inter-area minimum delay to the overall minimum delay."""
        return self.d_min_inter_steps // self.d_min_steps

    @property
    def S(self) -> int:
        """Number of simulation cycles."""
        return self.T_model_steps // self.d_min_steps

    @property
    def T_model_ms(self) -> float:
        return self.T_model_steps / self.h_steps_per_ms

    def steps(self, ms: float) -> int:
        return int(round(ms * self.h_steps_per_ms))


@dataclass(frozen=True)
class AreaSpec:
    area_id: int
    n_neurons: int
    rate_hz: float

    def __post_init__(self):
        if self.n_neurons < 1:
            raise ValueError(f"area {self.area_id}: n_neurons must be >= 1")
        if self.rate_hz < 0:
            raise ValueError(f"area {self.area_id}: negative rate {self.rate_hz}")


@dataclass(frozen=True)
class NeuronSpec:
    fire_interval_steps: int
    fire_phase_steps: int
    frozen: bool = False

    def fires_at(self, t: int) -> bool:
        if self.frozen or self.fire_interval_steps == NEVER:
            return False
        return (t + self.fire_phase_steps) % self.fire_interval_steps == 0


@dataclass(frozen=True)
class SynapseSpec:
    source_id: int
    target_id: int
    delay_steps: int
    range_class: str  # "intra" | "inter"


@dataclass(frozen=True)
class DelayDist:
    mean_ms: float
    sd_ms: float


@dataclass
class BenchmarkParams:
    """Inputs of :func:`generate_benchmark`.

    Delay defaults (mean/sd) are 1.25/0.625 ms intra-area and 5/2.5 ms
    inter-area; sizes are desk scale.
    """

    n_areas: int = 4
    neurons_per_area: int = 100
    k_intra: int = 10
    k_inter: int = 10
    grid: TimeGrid = field(default_factory=TimeGrid)
    intra_delay: DelayDist = field(default_factory=lambda: DelayDist(1.25, 0.625))
    inter_delay: DelayDist = field(default_factory=lambda: DelayDist(5.0, 2.5))
    rate_hz: float = 2.5
    rng_seed: int = 12


@dataclass
class NetworkSpec:
    grid: TimeGrid
    areas: list[AreaSpec]
    # per-neuron columns, indexed by global id
    area_of: np.ndarray
    fire_interval: np.ndarray
    fire_phase: np.ndarray
    frozen: np.ndarray
    # per-synapse columns
    source: np.ndarray
    target: np.ndarray
    delay: np.ndarray
    inter: np.ndarray
    k_intra: int
    k_inter: int
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def n_neurons(self) -> int:
        return len(self.area_of)

    @property
    def n_synapses(self) -> int:
        return len(self.source)

    @property
    def n_areas(self) -> int:
        return len(self.areas)

    @property
    def area_sizes(self) -> np.ndarray:
        return np.array([a.n_neurons for a in self.areas], dtype=np.int64)

    @property
    def area_offsets(self) -> np.ndarray:
        """First global id of every area, plus the total as a sentinel."""
        return np.concatenate([[0], np.cumsum(self.area_sizes)])

    def neuron(self, gid: int) -> NeuronSpec:
        return NeuronSpec(int(self.fire_interval[gid]), int(self.fire_phase[gid]), bool(self.frozen[gid]))

    def synapse(self, i: int) -> SynapseSpec:
        return SynapseSpec(
            int(self.source[i]), int(self.target[i]), int(self.delay[i]),
            "inter" if self.inter[i] else "intra",
        )

    @property
    def neurons(self) -> list[NeuronSpec]:
        return [self.neuron(i) for i in range(self.n_neurons)]

    @property
    def synapses(self) -> list[SynapseSpec]:
        return [self.synapse(i) for i in range(self.n_synapses)]

    def validate(self) -> None:
        """Raise ``ValueError`` if any structural invariant is broken."""
        g = self.grid
        offsets = self.area_offsets
        if offsets[-1] != self.n_neurons:
            raise ValueError("area sizes do not add up to the neuron count")
        expected_area = np.repeat(np.arange(self.n_areas), self.area_sizes)
        if not np.array_equal(expected_area, self.area_of):
            raise ValueError("neuron ids are not contiguous per area")
        if self.n_synapses:
            if self.source.min() < 0 or self.source.max() >= self.n_neurons:
                raise ValueError("synapse source out of range")
            if self.target.min() < 0 or self.target.max() >= self.n_neurons:
                raise ValueError("synapse target out of range")
        same_area = self.area_of[self.source] == self.area_of[self.target]
        if np.any(same_area == self.inter):
            raise ValueError("range class disagrees with area membership")
        if np.any(self.source == self.target):
            raise ValueError("self-connection present")
        if np.any(self.delay < g.d_min_steps):
            raise ValueError(f"delay below d_min_steps={g.d_min_steps}")
        if np.any(self.delay[self.inter] < g.d_min_inter_steps):
            raise ValueError(f"inter-area delay below d_min_inter_steps={g.d_min_inter_steps}")
        if np.any(self.frozen[self.source]) or np.any(self.frozen[self.target]):
            raise ValueError("frozen neuron is connected")
        live = self.fire_interval != NEVER
        if np.any(self.fire_phase[live] >= self.fire_interval[live]) or np.any(self.fire_phase < 0):
            raise ValueError("fire phase outside [0, interval)")

    def out_degrees(self) -> tuple[np.ndarray, np.ndarray]:
        """Realized outgoing (intra, inter) counts per neuron."""
        n = self.n_neurons
        intra = np.bincount(self.source[~self.inter], minlength=n)
        inter = np.bincount(self.source[self.inter], minlength=n)
        return intra, inter

    def with_single_spike(self, emit_steps: np.ndarray) -> "NetworkSpec":
        """Copy in which neuron ``i`` fires exactly once, at ``emit_steps[i]``.

        The interval is set to ``T_model_steps`` so no second emission falls
        inside the run.
        """
        emit_steps = np.asarray(emit_steps, dtype=np.int64)
        T = self.grid.T_model_steps
        if np.any(emit_steps < 0) or np.any(emit_steps >= T):
            raise ValueError("emission steps must lie in [0, T_model_steps)")
        interval = np.full(self.n_neurons, T, dtype=np.int64)
        phase = (interval - emit_steps) % interval
        return replace(self, fire_interval=interval, fire_phase=phase, metadata=dict(self.metadata))

    def to_dict(self) -> dict[str, Any]:
        return {
            "grid": asdict(self.grid),
            "areas": [asdict(a) for a in self.areas],
            "neurons": {
                "area_id": self.area_of.tolist(),
                "fire_interval_steps": self.fire_interval.tolist(),
                "fire_phase_steps": self.fire_phase.tolist(),
                "frozen": self.frozen.astype(bool).tolist(),
            },
            "synapses": {
                "source_id": self.source.tolist(),
                "target_id": self.target.tolist(),
                "delay_steps": self.delay.tolist(),
                "range_class": ["inter" if x else "intra" for x in self.inter],
            },
            "metadata": {"k_intra": self.k_intra, "k_inter": self.k_inter, **self.metadata},
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "NetworkSpec":
        meta = dict(doc.get("metadata", {}))
        k_intra = int(meta.pop("k_intra", 0))
        k_inter = int(meta.pop("k_inter", 0))
        n, s = doc["neurons"], doc["synapses"]
        return cls(
            grid=TimeGrid(**doc["grid"]),
            areas=[AreaSpec(**a) for a in doc["areas"]],
            area_of=np.asarray(n["area_id"], dtype=np.int64),
            fire_interval=np.asarray(n["fire_interval_steps"], dtype=np.int64),
            fire_phase=np.asarray(n["fire_phase_steps"], dtype=np.int64),
            frozen=np.asarray(n["frozen"], dtype=bool),
            source=np.asarray(s["source_id"], dtype=np.int64),
            target=np.asarray(s["target_id"], dtype=np.int64),
            delay=np.asarray(s["delay_steps"], dtype=np.int64),
            inter=np.asarray([c == "inter" for c in s["range_class"]], dtype=bool),
            k_intra=k_intra,
            k_inter=k_inter,
            metadata=meta,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "NetworkSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def __eq__(self, other):
        if not isinstance(other, NetworkSpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def _rng(seed: int, stream: int, entity: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), stream, int(entity)]))


def fire_interval_steps(rate_hz: float, h_steps_per_ms: int) -> int:
    """Steps between spikes of an ignore-and-fire neuron; ``NEVER`` for rate 0."""
    if rate_hz < 0:
        raise ValueError(f"negative rate {rate_hz}")
    if rate_hz == 0:
        return NEVER
    interval = int(round(1000.0 * h_steps_per_ms / rate_hz))
    if interval < 1:
        raise ValueError(
            f"rate {rate_hz} Hz exceeds the grid resolution of {h_steps_per_ms} steps/ms "
            f"(interval rounds to {interval} steps)"
        )
    return interval


def sample_delays(rng: np.random.Generator, n: int, dist: DelayDist, h: int, cutoff_steps: int) -> np.ndarray:
    steps = np.rint(rng.normal(dist.mean_ms, dist.sd_ms, size=n) * h).astype(np.int64)
    return np.maximum(steps, cutoff_steps)


def _check_params(p: BenchmarkParams) -> None:
    for name in ("n_areas", "neurons_per_area", "k_intra", "k_inter"):
        v = getattr(p, name)
        if v < 0 or (name in ("n_areas", "neurons_per_area") and v < 1):
            raise ValueError(f"{name} must be positive, got {v}")
    if p.k_intra >= p.neurons_per_area:
        raise ValueError(f"k_intra={p.k_intra} must be < neurons_per_area={p.neurons_per_area}")
    if p.k_inter > 0 and p.n_areas < 2:
        raise ValueError("k_inter > 0 needs at least two areas")


def _build(p: BenchmarkParams, areas: list[AreaSpec], metadata: dict[str, Any]) -> NetworkSpec:
    g = p.grid
    sizes = np.array([a.n_neurons for a in areas], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    N = int(offsets[-1])
    if p.k_intra and np.any(sizes <= p.k_intra):
        raise ValueError("every area must hold more than k_intra neurons")

    interval = np.empty(N, dtype=np.int64)
    phase = np.empty(N, dtype=np.int64)
    src_parts, tgt_parts, delay_parts, inter_parts = [], [], [], []
    for a, area in enumerate(areas):
        # one stream per area keeps output independent of generation order
        rng = _rng(p.rng_seed, _STREAM_AREA_NEURONS, a)
        lo, n_a = int(offsets[a]), int(sizes[a])
        ids = np.arange(lo, lo + n_a)
        iv = fire_interval_steps(area.rate_hz, g.h_steps_per_ms)
        interval[lo:lo + n_a] = iv
        phase[lo:lo + n_a] = rng.integers(0, iv, size=n_a) if iv != NEVER else 0

        if p.k_intra:
            local = rng.integers(0, n_a - 1, size=(n_a, p.k_intra))
            local += local >= (ids - lo)[:, None]  # skip self
            src_parts.append(np.repeat(ids, p.k_intra))
            tgt_parts.append((local + lo).ravel())
            delay_parts.append(sample_delays(rng, n_a * p.k_intra, p.intra_delay, g.h_steps_per_ms, g.d_min_steps))
            inter_parts.append(np.zeros(n_a * p.k_intra, dtype=bool))
        if p.k_inter:
            other = rng.integers(0, N - n_a, size=n_a * p.k_inter)
            other += np.where(other >= lo, n_a, 0)  # skip own area block
            src_parts.append(np.repeat(ids, p.k_inter))
            tgt_parts.append(other)
            delay_parts.append(sample_delays(rng, n_a * p.k_inter, p.inter_delay, g.h_steps_per_ms, g.d_min_inter_steps))
            inter_parts.append(np.ones(n_a * p.k_inter, dtype=bool))

    def cat(parts, dtype):
        return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype=dtype)

    net = NetworkSpec(
        grid=g,
        areas=areas,
        area_of=np.repeat(np.arange(len(areas)), sizes),
        fire_interval=interval,
        fire_phase=phase,
        frozen=np.zeros(N, dtype=bool),
        source=cat(src_parts, np.int64),
        target=cat(tgt_parts, np.int64),
        delay=cat(delay_parts, np.int64),
        inter=cat(inter_parts, bool),
        k_intra=p.k_intra,
        k_inter=p.k_inter,
        metadata=metadata,
    )
    return net


def generate_benchmark(p: BenchmarkParams) -> NetworkSpec:
    """Homogeneous multi-area benchmark network: equal areas, equal rates, fixed out-degrees."""
    _check_params(p)
    fire_interval_steps(p.rate_hz, p.grid.h_steps_per_ms)  # reject unrepresentable rates early
    areas = [AreaSpec(a, p.neurons_per_area, float(p.rate_hz)) for a in range(p.n_areas)]
    return _build(p, areas, {"generator": "benchmark", "rng_seed": p.rng_seed})


def sample_area_sizes(rng: np.random.Generator, n_areas: int, mean: int, cv: float, min_size: int) -> np.ndarray:
    if cv < 0:
        raise ValueError("cv_area_size must be >= 0")
    sizes = np.rint(rng.normal(mean, cv * mean, size=n_areas)).astype(np.int64)
    return np.maximum(sizes, min_size)


def sample_area_rates(rng: np.random.Generator, n_areas: int, mean: float, cv: float) -> np.ndarray:
    if cv < 0:
        raise ValueError("cv_rate must be >= 0")
    return np.maximum(rng.normal(mean, cv * mean, size=n_areas), 0.0)


def _cv(x: np.ndarray) -> float:
    m = float(np.mean(x))
    return float(np.std(x) / m) if m else 0.0


def generate_heterogeneous(p: BenchmarkParams, cv_area_size: float = 0.0, cv_rate: float = 0.0) -> NetworkSpec:
    """Benchmark network with normally distributed area sizes and per-area rates."""
    _check_params(p)
    sizes = sample_area_sizes(
        _rng(p.rng_seed, _STREAM_AREA_SIZES), p.n_areas, p.neurons_per_area, cv_area_size,
        max(p.k_intra + 1, 1),
    )
    rates = sample_area_rates(_rng(p.rng_seed, _STREAM_AREA_RATES), p.n_areas, p.rate_hz, cv_rate)
    for r in rates:
        fire_interval_steps(float(r), p.grid.h_steps_per_ms)
    areas = [AreaSpec(a, int(n), float(r)) for a, (n, r) in enumerate(zip(sizes, rates))]
    meta = {
        "generator": "heterogeneous",
        "rng_seed": p.rng_seed,
        "cv_area_size": cv_area_size,
        "cv_rate": cv_rate,
        "realized_mean_area_size": float(np.mean(sizes)),
        "realized_cv_area_size": _cv(sizes),
        "realized_mean_rate_hz": float(np.mean(rates)),
        "realized_cv_rate": _cv(rates),
    }
    return _build(p, areas, meta)
