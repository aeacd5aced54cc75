"""Fraction of irregular (first-synapse) memory accesses during spike delivery.

The analytic expressions assume random connectivity with ``K_N`` synapses per
neuron; :func:`f_irr_bruteforce` counts the same quantity on an instantiated
network and placement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..model import NetworkSpec
from ..partition import PartitionPlan
from ..tables import LONG, SHORT, synapse_classes


@dataclass(frozen=True)
class AccessModelParams:
    N: int
    M: int
    T_M: int
    K_N: float
    K_intra: float = 0.0
    K_inter: float = 0.0

    @classmethod
    def weak_scaling(cls, N_M: int, M: int, T_M: int, K_N: float,
                     K_intra: float | None = None, K_inter: float | None = None) -> "AccessModelParams":
        """Equal areas of ``N_M`` neurons, one per rank; defaults split ``K_N`` evenly."""
        K_intra = K_N / 2 if K_intra is None else K_intra
        K_inter = K_N - K_intra if K_inter is None else K_inter
        return cls(N=N_M * M, M=M, T_M=T_M, K_N=K_N, K_intra=K_intra, K_inter=K_inter)

    @property
    def T(self) -> int:
        return self.M * self.T_M

    @property
    def N_M(self) -> float:
        return self.N / self.M

    @property
    def N_T(self) -> float:
        return self.N / self.T


def _p_at_least_one(p_single: float, draws: float) -> float:
    """1 - (1 - p_single)**draws without losing precision for tiny p / huge draws."""
    return -math.expm1(draws * math.log1p(-p_single))


def f_irr_conventional(p: AccessModelParams) -> float:
    if p.N <= 0 or p.K_N <= 0 or p.T <= 0:
        raise ValueError("N, K_N and T must be positive")
    p_target = _p_at_least_one(1.0 / p.N, p.N_T * p.K_N)
    return p_target * p.T / p.K_N


def f_irr_structure_aware(p: AccessModelParams) -> float:
    if p.M < 2:
        raise ValueError("structure-aware access model needs M >= 2 (no neurons outside the own area)")
    if not math.isclose(p.K_intra + p.K_inter, p.K_N):
        raise ValueError(f"K_intra + K_inter = {p.K_intra + p.K_inter} != K_N = {p.K_N}")
    p_intra = _p_at_least_one(1.0 / p.N_M, p.N_T * p.K_intra)
    p_inter = _p_at_least_one(1.0 / (p.N - p.N_M), p.N_T * p.K_inter)
    return (p_intra * p.T_M + p_inter * p.T_M * (p.M - 1)) / p.K_N


def irregular_reduction(p: AccessModelParams) -> float:
    """Relative reduction of the irregular fraction, structure-aware vs conventional."""
    return 1.0 - f_irr_structure_aware(p) / f_irr_conventional(p)


def access_groups(net: NetworkSpec, plan: PartitionPlan) -> tuple[np.ndarray, np.ndarray]:
    """Distinct (source, rank, thread, table class) groups and synapses, counted per class."""
    cls = synapse_classes(net, plan)
    key = (
        (net.source * plan.n_ranks + plan.rank_of[net.target]) * plan.threads_per_rank
        + plan.thread_of[net.target]
    ) * 2 + cls
    uniq = np.unique(key)
    groups = np.bincount(uniq % 2, minlength=2)
    synapses = np.bincount(cls, minlength=2)
    return groups, synapses


def f_irr_bruteforce(net: NetworkSpec, plan: PartitionPlan) -> dict[str, float]:
    groups, synapses = access_groups(net, plan)
    out = {}
    for name, c in (("short", SHORT), ("long", LONG)):
        out[name] = float(groups[c] / synapses[c]) if synapses[c] else float("nan")
    out["combined"] = float(groups.sum() / synapses.sum()) if synapses.sum() else float("nan")
    return out


def f_irr_engine(metrics) -> dict[str, float]:
    """Irregular accesses per delivered synapse event from engine counters."""
    irr = metrics.n_irregular.sum(axis=(1, 2))
    dl = metrics.n_deliveries.sum(axis=(1, 2))
    out = {}
    for name, c in (("short", SHORT), ("long", LONG)):
        out[name] = float(irr[c] / dl[c]) if dl[c] else float("nan")
    out["combined"] = float(irr.sum() / dl.sum()) if dl.sum() else float("nan")
    return out
