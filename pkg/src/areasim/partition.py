"""Neuron placement on virtual ranks and threads.

Two schemes are supported: the conventional round-robin over the flattened
(rank, thread) sequence, and the structure-aware scheme that hosts one area
per rank and pads smaller areas with frozen ghost neurons.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .model import NetworkSpec

CONVENTIONAL = "conventional"
STRUCTURE_AWARE = "structure_aware"
SCHEMES = (CONVENTIONAL, STRUCTURE_AWARE)


@dataclass
class PartitionPlan:
    """Placement of every neuron slot, including ghost slots.

    Real neurons keep their network ids ``0..n_real-1``; ghost slots get ids
    from ``n_real`` upward and are flagged frozen.
    """

    scheme: str
    n_ranks: int
    threads_per_rank: int
    rank_of: np.ndarray
    thread_of: np.ndarray
    frozen: np.ndarray
    n_real: int
    D: int
    global_exchange_period_cycles: int
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def M(self) -> int:
        return self.n_ranks

    @property
    def T_M(self) -> int:
        return self.threads_per_rank

    @property
    def frozen_ids(self) -> set[int]:
        return set(np.flatnonzero(self.frozen).tolist())

    @property
    def n_slots(self) -> int:
        return len(self.rank_of)

    def assignment(self, gid: int) -> tuple[int, int]:
        return int(self.rank_of[gid]), int(self.thread_of[gid])

    def neurons_on(self, rank: int) -> np.ndarray:
        return np.flatnonzero(self.rank_of == rank)

    def slots_per_rank(self) -> np.ndarray:
        return np.bincount(self.rank_of, minlength=self.n_ranks)

    def check_consistent(self, net: NetworkSpec) -> None:
        if self.n_real != net.n_neurons:
            raise ValueError(f"plan covers {self.n_real} neurons, network has {net.n_neurons}")
        if self.D != net.grid.D:
            raise ValueError(f"plan D={self.D} but network grid D={net.grid.D}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "scheme": self.scheme,
            "n_ranks": self.n_ranks,
            "threads_per_rank": self.threads_per_rank,
            "rank_of": self.rank_of.tolist(),
            "thread_of": self.thread_of.tolist(),
            "frozen_ids": sorted(self.frozen_ids),
            "n_real": self.n_real,
            "D": self.D,
            "global_exchange_period_cycles": self.global_exchange_period_cycles,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "PartitionPlan":
        rank_of = np.asarray(doc["rank_of"], dtype=np.int64)
        frozen = np.zeros(len(rank_of), dtype=bool)
        frozen[np.asarray(doc["frozen_ids"], dtype=np.int64)] = True
        return cls(
            scheme=doc["scheme"],
            n_ranks=int(doc["n_ranks"]),
            threads_per_rank=int(doc["threads_per_rank"]),
            rank_of=rank_of,
            thread_of=np.asarray(doc["thread_of"], dtype=np.int64),
            frozen=frozen,
            n_real=int(doc["n_real"]),
            D=int(doc["D"]),
            global_exchange_period_cycles=int(doc["global_exchange_period_cycles"]),
            metadata=dict(doc.get("metadata", {})),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "PartitionPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))


def plan_round_robin(net: NetworkSpec, M: int, T_M: int) -> PartitionPlan:
    if M < 1 or T_M < 1:
        raise ValueError("M and T_M must be >= 1")
    flat = np.arange(net.n_neurons) % (M * T_M)
    return PartitionPlan(
        scheme=CONVENTIONAL,
        n_ranks=M,
        threads_per_rank=T_M,
        rank_of=flat // T_M,
        thread_of=flat % T_M,
        frozen=net.frozen.copy(),
        n_real=net.n_neurons,
        D=net.grid.D,
        global_exchange_period_cycles=1,
    )


def plan_structure_aware(net: NetworkSpec, T_M: int) -> PartitionPlan:
    """One area per rank; every rank padded with ghosts to the largest area."""
    if T_M < 1:
        raise ValueError("T_M must be >= 1")
    sizes = net.area_sizes
    M = len(sizes)
    n_slots = int(sizes.max())
    offsets = net.area_offsets

    n_ghosts = n_slots - sizes
    ghost_rank = np.repeat(np.arange(M), n_ghosts)
    # position of each ghost inside its rank, after the area's real neurons
    ghost_pos = np.concatenate([np.arange(s, n_slots) for s in sizes]) if n_ghosts.sum() else np.zeros(0, np.int64)
    real_pos = np.arange(net.n_neurons) - offsets[net.area_of]

    rank_of = np.concatenate([net.area_of, ghost_rank]).astype(np.int64)
    pos = np.concatenate([real_pos, ghost_pos]).astype(np.int64)
    frozen = np.concatenate([net.frozen, np.ones(int(n_ghosts.sum()), dtype=bool)])
    return PartitionPlan(
        scheme=STRUCTURE_AWARE,
        n_ranks=M,
        threads_per_rank=T_M,
        rank_of=rank_of,
        thread_of=pos % T_M,
        frozen=frozen,
        n_real=net.n_neurons,
        D=net.grid.D,
        global_exchange_period_cycles=net.grid.D,
        metadata={
            "slots_per_rank": n_slots,
            "n_ghosts": n_ghosts.tolist(),
            "frozen_fraction": float(1.0 - sizes.mean() / n_slots),
        },
    )


def make_plan(net: NetworkSpec, scheme: str, T_M: int, M: int | None = None) -> PartitionPlan:
    """Build a plan by scheme name; ``M`` defaults to the area count."""
    if scheme == CONVENTIONAL:
        return plan_round_robin(net, net.n_areas if M is None else M, T_M)
    if scheme == STRUCTURE_AWARE:
        if M is not None and M != net.n_areas:
            raise ValueError(f"structure-aware placement needs M == n_areas ({net.n_areas}), got {M}")
        return plan_structure_aware(net, T_M)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
