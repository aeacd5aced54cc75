"""Postsynaptic connection/source tables and presynaptic target tables.

Each rank stores, per (thread, range class), the synapses whose target it
hosts, jointly sorted by source id. Range class ``short`` carries intra-area
synapses and ``long`` inter-area ones; under the conventional scheme every
synapse lands in ``short`` and ``long`` stays empty.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import NetworkSpec
from .partition import STRUCTURE_AWARE, PartitionPlan

SHORT, LONG = 0, 1
RANGE_CLASSES = ("short", "long")
ANNOUNCE_BYTES = 8  # 4 byte source id + 4 byte rank


@dataclass
class ConnectionTable:
    targets: np.ndarray
    delays: np.ndarray

    def __len__(self):
        return len(self.targets)


@dataclass
class TargetTable:
    """Destination ranks per local source neuron, in CSR form.

    ``ranks[indptr[i]:indptr[i+1]]`` are the distinct ranks hosting at least
    one target of ``sources[i]``.
    """

    sources: np.ndarray
    indptr: np.ndarray
    ranks: np.ndarray
    threads: np.ndarray

    def destinations(self, gid: int) -> np.ndarray:
        i = np.searchsorted(self.sources, gid)
        if i == len(self.sources) or self.sources[i] != gid:
            return np.zeros(0, dtype=np.int64)
        return self.ranks[self.indptr[i]:self.indptr[i + 1]]

    def expand(self, gids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (index into ``gids``, destination rank) for every entry to send."""
        if len(self.sources) == 0 or len(gids) == 0:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        pos = np.searchsorted(self.sources, gids)
        pos_c = np.minimum(pos, len(self.sources) - 1)
        found = self.sources[pos_c] == gids
        lo = np.where(found, self.indptr[pos_c], 0)
        n = np.where(found, self.indptr[pos_c + 1] - self.indptr[pos_c], 0)
        which = np.repeat(np.arange(len(gids)), n)
        idx = _ranges(lo, n)
        return which, self.ranks[idx]


@dataclass
class RankTables:
    rank: int
    n_threads: int
    connections: dict[tuple[int, int], ConnectionTable] = field(default_factory=dict)
    sources: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    targets: dict[int, TargetTable] = field(default_factory=dict)

    def lookup(self, source_id: int, range_class: int) -> dict[int, slice]:
        """Contiguous entry run of ``source_id`` on every thread that has one."""
        out = {}
        for t in range(self.n_threads):
            src = self.sources[(t, range_class)]
            lo = np.searchsorted(src, source_id, "left")
            hi = np.searchsorted(src, source_id, "right")
            if hi > lo:
                out[t] = slice(int(lo), int(hi))
        return out

    def lookup_many(self, source_ids: np.ndarray, thread: int, range_class: int) -> tuple[np.ndarray, np.ndarray]:
        src = self.sources[(thread, range_class)]
        return np.searchsorted(src, source_ids, "left"), np.searchsorted(src, source_ids, "right")

    def n_entries(self, range_class: int | None = None) -> int:
        return sum(len(c) for (t, k), c in self.connections.items() if range_class in (None, k))


@dataclass
class TableSet:
    ranks: list[RankTables]
    construction: dict[str, int]

    def __getitem__(self, r: int) -> RankTables:
        return self.ranks[r]

    def __len__(self):
        return len(self.ranks)


def _ranges(starts: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Concatenate ``arange(s, s + c)`` for every pair, vectorized."""
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    offs = np.repeat(np.cumsum(counts) - counts, counts)
    return np.repeat(starts, counts) + (np.arange(total) - offs)


def synapse_classes(net: NetworkSpec, plan: PartitionPlan) -> np.ndarray:
    if plan.scheme == STRUCTURE_AWARE:
        return np.where(net.inter, LONG, SHORT)
    return np.full(net.n_synapses, SHORT)


def build_tables(net: NetworkSpec, plan: PartitionPlan) -> TableSet:
    plan.check_consistent(net)
    if net.n_synapses and (np.any(plan.frozen[net.source]) or np.any(plan.frozen[net.target])):
        bad = np.flatnonzero(plan.frozen[net.source] | plan.frozen[net.target])[0]
        raise ValueError(f"synapse {bad} ({net.source[bad]}->{net.target[bad]}) touches a frozen neuron")

    M, T_M = plan.n_ranks, plan.threads_per_rank
    cls = synapse_classes(net, plan)
    t_rank = plan.rank_of[net.target]
    t_thread = plan.thread_of[net.target]
    # one stable sort groups by (rank, thread, class) and orders by source inside
    order = np.lexsort((net.target, net.source, cls, t_thread, t_rank))
    key = (t_rank * T_M + t_thread) * 2 + cls
    bounds = np.searchsorted(key[order], np.arange(M * T_M * 2 + 1))

    tables = [RankTables(r, T_M) for r in range(M)]
    for r in range(M):
        for t in range(T_M):
            for c in (SHORT, LONG):
                b = (r * T_M + t) * 2 + c
                sel = order[bounds[b]:bounds[b + 1]]
                tables[r].sources[(t, c)] = net.source[sel]
                tables[r].connections[(t, c)] = ConnectionTable(net.target[sel], net.delay[sel])

    # connectivity exchange: each rank announces (source -> me) to the source's owner
    construction = {}
    for c in (SHORT, LONG):
        announced = []
        for r in range(M):
            srcs = np.unique(np.concatenate([tables[r].sources[(t, c)] for t in range(T_M)]))
            announced.append(np.stack([srcs, np.full(len(srcs), r)], axis=1))
        pairs = np.concatenate(announced) if announced else np.zeros((0, 2), np.int64)
        owner = plan.rank_of[pairs[:, 0]]
        n_off_rank = int(np.count_nonzero(owner != pairs[:, 1]))
        name = RANGE_CLASSES[c]
        construction[f"announcements_{name}"] = len(pairs)
        construction[f"announce_bytes_{name}"] = ANNOUNCE_BYTES * len(pairs)
        construction[f"announce_off_rank_{name}"] = n_off_rank
        construction[f"announce_rounds_{name}"] = 1
        for r in range(M):
            mine = pairs[owner == r]
            mine = mine[np.lexsort((mine[:, 1], mine[:, 0]))]
            srcs, first = np.unique(mine[:, 0], return_index=True)
            indptr = np.append(first, len(mine)).astype(np.int64)
            tables[r].targets[c] = TargetTable(srcs, indptr, mine[:, 1].copy(), plan.thread_of[srcs])
    return TableSet(tables, construction)
