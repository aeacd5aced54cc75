"""Pending-event ring buffer and collective exchange buffers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class RingBuffer:
    """Events keyed by arrival step, stored in ``length`` slots.

    Slot ``step % length`` holds the events arriving at ``step``. The owner
    must pop each step before ``length`` further steps are written.
    """

    def __init__(self, length: int):
        if length < 1:
            raise ValueError("ring buffer length must be >= 1")
        self.length = length
        self._slots: list[list[tuple[np.ndarray, np.ndarray]]] = [[] for _ in range(length)]
        self._step_of: list[int | None] = [None] * length

    def add(self, arrival: np.ndarray, targets: np.ndarray, sources: np.ndarray, now: int) -> None:
        if len(arrival) == 0:
            return
        if arrival.min() < now or arrival.max() >= now + self.length:
            raise ValueError(
                f"arrival steps [{arrival.min()}, {arrival.max()}] outside ring window "
                f"[{now}, {now + self.length})"
            )
        order = np.argsort(arrival, kind="stable")
        arrival, targets, sources = arrival[order], targets[order], sources[order]
        steps, starts = np.unique(arrival, return_index=True)
        ends = np.append(starts[1:], len(arrival))
        for step, lo, hi in zip(steps.tolist(), starts.tolist(), ends.tolist()):
            i = step % self.length
            if self._step_of[i] not in (None, step):
                raise RuntimeError(f"slot {i} still holds step {self._step_of[i]}")
            self._step_of[i] = step
            self._slots[i].append((targets[lo:hi], sources[lo:hi]))

    def pop(self, step: int) -> tuple[np.ndarray, np.ndarray]:
        """Remove and return (targets, sources) of events arriving at ``step``."""
        i = step % self.length
        chunks = self._slots[i]
        if self._step_of[i] not in (None, step):
            raise RuntimeError(f"slot {i} holds step {self._step_of[i]}, popped at {step}")
        self._slots[i] = []
        self._step_of[i] = None
        if not chunks:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        return np.concatenate([c[0] for c in chunks]), np.concatenate([c[1] for c in chunks])

    def __len__(self):
        return sum(len(t) for slot in self._slots for t, _ in slot)


@dataclass
class Payload:
    """Entries one rank sends in one exchange: destination, source id, emission offset."""

    dest: np.ndarray
    source: np.ndarray
    offset: np.ndarray

    @classmethod
    def empty(cls) -> "Payload":
        z = np.zeros(0, np.int64)
        return cls(z, z.copy(), z.copy())

    def __len__(self):
        return len(self.dest)


@dataclass
class ExchangeResult:
    received: list[tuple[np.ndarray, np.ndarray]]  # per receiver: (source, offset)
    n_entries: int
    resize_rounds: int
    capacity: int


class ExchangeBuffers:
    """Send/receive buffers of one range class with a uniform per-destination capacity.

    Capacity only grows. When any (sender, receiver) region overflows, every
    rank doubles its capacity until all regions fit and the whole exchange is
    repeated once.
    """

    def __init__(self, n_ranks: int, capacity: int = 64):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.n_ranks = n_ranks
        self.capacity = capacity
        self.total_resize_rounds = 0

    def counts(self, payloads: list[Payload]) -> np.ndarray:
        return np.stack([np.bincount(p.dest, minlength=self.n_ranks) for p in payloads])

    def alltoall(self, payloads: list[Payload]) -> ExchangeResult:
        if len(payloads) != self.n_ranks:
            raise ValueError(f"expected {self.n_ranks} payloads, got {len(payloads)}")
        counts = self.counts(payloads)
        rounds = 0
        if counts.size and counts.max() > self.capacity:
            while counts.max() > self.capacity:
                self.capacity *= 2
            rounds = 1  # secondary round resends everything at the new capacity
        self.total_resize_rounds += rounds

        parts: list[list[tuple[np.ndarray, np.ndarray]]] = [[] for _ in range(self.n_ranks)]
        for p in payloads:
            order = np.argsort(p.dest, kind="stable")
            cuts = np.searchsorted(p.dest[order], np.arange(self.n_ranks + 1))
            for j in range(self.n_ranks):
                sel = order[cuts[j]:cuts[j + 1]]
                parts[j].append((p.source[sel], p.offset[sel]))
        received = [
            (np.concatenate([s for s, _ in pj]), np.concatenate([o for _, o in pj])) for pj in parts
        ]
        return ExchangeResult(received, int(counts.sum()), rounds, self.capacity)

    def swap(self, payloads: list[Payload]) -> ExchangeResult:
        """Process-local exchange: each rank's send buffer becomes its receive buffer."""
        for r, p in enumerate(payloads):
            if len(p) and np.any(p.dest != r):
                raise ValueError(f"rank {r}: local exchange holds entries for another rank")
        return self.alltoall(payloads)
