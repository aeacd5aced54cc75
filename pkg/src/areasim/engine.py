"""Cycle loop over virtual ranks: deliver, update, collocate, exchange.

All ranks live in one process. Exchange points are rendezvous: each cycle
every rank runs its three local phases (optionally on a thread pool), then
the coordinator performs the exchanges and hands receive buffers back.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .buffers import ExchangeBuffers, Payload, RingBuffer
from .model import NEVER, NetworkSpec
from .partition import STRUCTURE_AWARE, PartitionPlan
from .tables import LONG, RANGE_CLASSES, SHORT, RankTables, TableSet, _ranges, build_tables

DELIVERY_DTYPE = np.dtype([("source", np.int64), ("target", np.int64), ("arrival", np.int64)])

METRICS_COLUMNS = (
    "run_id", "scheme", "rank", "cycle", "n_updates",
    "n_deliveries_intra", "n_deliveries_inter",
    "n_irregular_intra", "n_irregular_inter",
    "n_collocated", "proxy_time", "n_spikes_emitted",
)
EXCHANGE_COLUMNS = ("run_id", "scheme", "cycle", "class", "bytes", "resize_rounds", "kind", "n_entries", "capacity")
# CSV class labels per table bucket; the conventional scheme only uses the first
CLASS_LABELS = ("intra", "inter")


class CausalityError(RuntimeError):
    """A spike would arrive before the cycle in which it becomes visible."""


@dataclass
class RunOptions:
    record_deliveries: bool = False
    rng_seed: int = 0  # the engine draws nothing; kept so run configs pin it
    workers: int = 1
    initial_capacity: int = 64
    id_bytes: int = 4
    offset_bytes: int = 1

    @property
    def entry_bytes(self) -> int:
        return self.id_bytes + self.offset_bytes


@dataclass(frozen=True)
class CostParams:
    c_update: float = 1.0
    c_hit: float = 1.0
    c_miss: float = 5.0
    c_collocate: float = 1.0

    def __post_init__(self):
        for k, v in vars(self).items():
            if v < 0:
                raise ValueError(f"{k} must be non-negative, got {v}")


@dataclass
class ExchangeEvent:
    cycle: int
    range_class: str
    kind: str  # "global" | "local"
    n_entries: int
    bytes: int
    resize_rounds: int
    capacity: int


@dataclass
class Metrics:
    """Per-(rank, cycle) counters; class-indexed arrays have shape (2, M, S)."""

    n_updates: np.ndarray
    n_spikes_emitted: np.ndarray
    n_deliveries: np.ndarray
    n_irregular: np.ndarray
    n_collocated: np.ndarray
    events: list[ExchangeEvent] = field(default_factory=list)

    @classmethod
    def zeros(cls, M: int, S: int) -> "Metrics":
        z = lambda *shape: np.zeros(shape, dtype=np.int64)  # noqa: E731
        return cls(z(M, S), z(M, S), z(2, M, S), z(2, M, S), z(2, M, S))

    @property
    def n_global_exchanges(self) -> int:
        return sum(e.kind == "global" for e in self.events)

    @property
    def n_local_exchanges(self) -> int:
        return sum(e.kind == "local" for e in self.events)

    @property
    def n_resize_rounds(self) -> int:
        return sum(e.resize_rounds for e in self.events)

    def entries(self, kind: str | None = None) -> int:
        return sum(e.n_entries for e in self.events if kind in (None, e.kind))

    def bytes(self, kind: str | None = None) -> int:
        return sum(e.bytes for e in self.events if kind in (None, e.kind))


@dataclass
class RunResult:
    scheme: str
    net: NetworkSpec
    plan: PartitionPlan
    metrics: Metrics
    deliveries: np.ndarray | None
    construction: dict[str, int]
    received_entries: int = 0

    @property
    def M(self) -> int:
        return self.plan.n_ranks

    @property
    def S(self) -> int:
        return self.net.grid.S

    def proxy_matrix(self, cost: CostParams = CostParams()) -> np.ndarray:
        return synthetic_cycle_time(self.metrics, cost)

    def metric_rows(self, run_id: str, cost: CostParams = CostParams()) -> Iterator[dict]:
        m, proxy = self.metrics, self.proxy_matrix(cost)
        for r in range(self.M):
            for c in range(self.S):
                yield {
                    "run_id": run_id, "scheme": self.scheme, "rank": r, "cycle": c,
                    "n_updates": int(m.n_updates[r, c]),
                    "n_deliveries_intra": int(m.n_deliveries[SHORT, r, c]),
                    "n_deliveries_inter": int(m.n_deliveries[LONG, r, c]),
                    "n_irregular_intra": int(m.n_irregular[SHORT, r, c]),
                    "n_irregular_inter": int(m.n_irregular[LONG, r, c]),
                    "n_collocated": int(m.n_collocated[:, r, c].sum()),
                    "proxy_time": float(proxy[r, c]),
                    "n_spikes_emitted": int(m.n_spikes_emitted[r, c]),
                }

    def exchange_rows(self, run_id: str) -> Iterator[dict]:
        for e in self.metrics.events:
            yield {
                "run_id": run_id, "scheme": self.scheme, "cycle": e.cycle,
                "class": CLASS_LABELS[RANGE_CLASSES.index(e.range_class)],
                "bytes": e.bytes, "resize_rounds": e.resize_rounds,
                "kind": e.kind, "n_entries": e.n_entries, "capacity": e.capacity,
            }

    def write_metrics_csv(self, path, run_id: str, cost: CostParams = CostParams()) -> None:
        with open(path, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=METRICS_COLUMNS, lineterminator="\n")
            w.writeheader()
            w.writerows(self.metric_rows(run_id, cost))

    def write_exchange_csv(self, path, run_id: str) -> None:
        with open(path, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=EXCHANGE_COLUMNS, lineterminator="\n")
            w.writeheader()
            w.writerows(self.exchange_rows(run_id))


def synthetic_cycle_time(m: Metrics, cost: CostParams) -> np.ndarray:
    """Counter-weighted stand-in for the measured cycle time, shape (M, S)."""
    deliveries = m.n_deliveries.sum(axis=0)
    irregular = m.n_irregular.sum(axis=0)
    return (
        cost.c_update * m.n_updates
        + cost.c_miss * irregular
        + cost.c_hit * (deliveries - irregular)
        + cost.c_collocate * m.n_collocated.sum(axis=0)
    ).astype(float)


def sort_deliveries(d: np.ndarray) -> np.ndarray:
    return d[np.lexsort((d["source"], d["target"], d["arrival"]))]


class VirtualRank:
    def __init__(self, rank: int, net: NetworkSpec, plan: PartitionPlan, tables: RankTables,
                 metrics: Metrics, record: bool):
        self.rank = rank
        self.grid = net.grid
        self.tables = tables
        self.metrics = metrics
        self.record = record
        self.n_threads = plan.threads_per_rank

        hosted = plan.neurons_on(rank)
        active = hosted[~plan.frozen[hosted]]
        self.n_active = len(active)
        firing = active[net.fire_interval[active] != NEVER]
        self.gids = firing
        self.interval = net.fire_interval[firing]
        self.phase = net.fire_phase[firing]
        self.max_fires = (
            int(-(-self.grid.d_min_steps // self.interval.min())) if len(firing) else 0
        )

        max_delay = int(net.delay.max()) if net.n_synapses else 1
        self.rings = [RingBuffer(max_delay + 1) for _ in range(self.n_threads)]
        self.registers: list[list[tuple[np.ndarray, np.ndarray]]] = [[], []]
        self.delivered: list[np.ndarray] = []

    # phases ---------------------------------------------------------------
    def deliver(self, cycle: int, inbox: list[tuple[np.ndarray, np.ndarray]]) -> None:
        s0 = cycle * self.grid.d_min_steps
        T = self.grid.T_model_steps
        for c in (SHORT, LONG):
            src, emit = inbox[c]
            if len(src) == 0:
                continue
            if emit.max() >= s0:
                raise CausalityError(f"rank {self.rank} cycle {cycle}: received spike emitted at {emit.max()} >= {s0}")
            n_del = n_irr = 0
            for t in range(self.n_threads):
                lo, hi = self.tables.lookup_many(src, t, c)
                n = hi - lo
                if not n.any():
                    continue
                idx = _ranges(lo, n)
                spike = np.repeat(np.arange(len(src)), n)
                conn = self.tables.connections[(t, c)]
                arrival = emit[spike] + conn.delays[idx]
                if arrival.min() < s0:
                    i = int(np.argmin(arrival))
                    raise CausalityError(
                        f"rank {self.rank} cycle {cycle} class {RANGE_CLASSES[c]}: spike of neuron "
                        f"{src[spike[i]]} emitted at {emit[spike[i]]} with delay {conn.delays[idx[i]]} "
                        f"arrives at {arrival[i]}, before visibility at step {s0}"
                    )
                keep = arrival < T  # events past the horizon never take effect
                n_del += int(keep.sum())
                n_irr += int(np.count_nonzero(np.bincount(spike[keep], minlength=len(src))))
                self.rings[t].add(arrival[keep], conn.targets[idx[keep]], src[spike[keep]], now=s0)
            self.metrics.n_deliveries[c, self.rank, cycle] = n_del
            self.metrics.n_irregular[c, self.rank, cycle] = n_irr

    def update(self, cycle: int) -> None:
        dmin = self.grid.d_min_steps
        s0 = cycle * dmin
        for step in range(s0, s0 + dmin):
            for ring in self.rings:
                targets, sources = ring.pop(step)
                if self.record and len(targets):
                    rec = np.empty(len(targets), DELIVERY_DTYPE)
                    rec["source"], rec["target"], rec["arrival"] = sources, targets, step
                    self.delivered.append(rec)
        self.metrics.n_updates[self.rank, cycle] = self.n_active * dmin

        if not len(self.gids):
            return
        first = s0 + (-(s0 + self.phase)) % self.interval
        gid_parts, t_parts = [], []
        for k in range(self.max_fires):
            t = first + k * self.interval
            hit = t < s0 + dmin
            gid_parts.append(self.gids[hit])
            t_parts.append(t[hit])
        gids, steps = np.concatenate(gid_parts), np.concatenate(t_parts)
        order = np.lexsort((gids, steps))
        gids, steps = gids[order], steps[order]
        self.metrics.n_spikes_emitted[self.rank, cycle] = len(gids)
        for c in (SHORT, LONG):
            tt = self.tables.targets[c]
            if len(tt.sources) == 0:
                continue
            pos = np.minimum(np.searchsorted(tt.sources, gids), len(tt.sources) - 1)
            has = tt.sources[pos] == gids
            if has.any():
                self.registers[c].append((gids[has], steps[has]))

    def collocate(self, cycle: int, c: int, window_start: int) -> Payload:
        reg = self.registers[c]
        self.registers[c] = []
        if not reg:
            return Payload.empty()
        gids = np.concatenate([g for g, _ in reg])
        steps = np.concatenate([s for _, s in reg])
        which, dest = self.tables.targets[c].expand(gids)
        self.metrics.n_collocated[c, self.rank, cycle] += len(dest)
        return Payload(dest, gids[which], steps[which] - window_start)


def run(net: NetworkSpec, plan: PartitionPlan, options: RunOptions | None = None,
        tables: TableSet | None = None) -> RunResult:
    """Simulate all ``S`` cycles of ``net`` under ``plan``."""
    opts = options or RunOptions()
    g = net.grid
    plan.check_consistent(net)
    if tables is None:
        tables = build_tables(net, plan)
    M, S, D, dmin = plan.n_ranks, g.S, plan.D, g.d_min_steps
    structure_aware = plan.scheme == STRUCTURE_AWARE
    period = plan.global_exchange_period_cycles

    metrics = Metrics.zeros(M, S)
    ranks = [VirtualRank(r, net, plan, tables[r], metrics, opts.record_deliveries) for r in range(M)]
    buffers = [ExchangeBuffers(M, opts.initial_capacity), ExchangeBuffers(M, opts.initial_capacity)]
    empty = (np.zeros(0, np.int64), np.zeros(0, np.int64))
    inbox = [[empty, empty] for _ in range(M)]
    received_total = 0

    pool = ThreadPoolExecutor(opts.workers) if opts.workers > 1 else None

    def local_phases(r: int, cycle: int, drain: tuple[bool, bool], starts: tuple[int, int]):
        vr = ranks[r]
        vr.deliver(cycle, inbox[r])
        vr.update(cycle)
        return [vr.collocate(cycle, c, starts[c]) if drain[c] else None for c in (SHORT, LONG)]

    try:
        for cycle in range(S):
            s0 = cycle * dmin
            is_global = (cycle + 1) % period == 0
            drain = (True, structure_aware and (cycle + 1) % D == 0)
            starts = (s0, (cycle + 1 - D) * dmin)
            if pool is None:
                out = [local_phases(r, cycle, drain, starts) for r in range(M)]
            else:
                out = list(pool.map(lambda r: local_phases(r, cycle, drain, starts), range(M)))

            # rendezvous: hand receive buffers to the next cycle
            inbox = [[empty, empty] for _ in range(M)]
            for c in (SHORT, LONG):
                if not drain[c]:
                    continue
                payloads = [o[c] for o in out]
                window = dmin if c == SHORT else D * dmin
                for p in payloads:
                    if len(p) and (p.offset.min() < 0 or p.offset.max() >= window):
                        raise CausalityError(f"cycle {cycle}: emission offset outside its {window}-step window")
                if c == SHORT and structure_aware:
                    kind, res = "local", buffers[c].swap(payloads)
                else:
                    if c == SHORT and not is_global:
                        raise AssertionError("conventional short exchange must be global")
                    kind, res = "global", buffers[c].alltoall(payloads)
                metrics.events.append(ExchangeEvent(
                    cycle, RANGE_CLASSES[c], kind, res.n_entries,
                    res.n_entries * opts.entry_bytes, res.resize_rounds, res.capacity,
                ))
                for r, (src, off) in enumerate(res.received):
                    inbox[r][c] = (src, off + starts[c])
                    received_total += len(src)
    finally:
        if pool is not None:
            pool.shutdown()

    deliveries = None
    if opts.record_deliveries:
        parts = [d for vr in ranks for d in vr.delivered]
        deliveries = sort_deliveries(np.concatenate(parts)) if parts else np.zeros(0, DELIVERY_DTYPE)
    return RunResult(plan.scheme, net, plan, metrics, deliveries, tables.construction, received_total)
