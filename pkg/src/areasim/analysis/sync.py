"""Order-statistics model of synchronization cost at exchange barriers.

Cycle times ``t[m, s]`` of ``M`` ranks over ``S`` cycles are i.i.d. normal
(or AR(1) per rank when ``rho > 0``). Ranks wait at a barrier every
``period`` cycles; the wall time is the sum over barrier windows of the
slowest rank's window time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .normal import norm_ppf

BLOM_ALPHA = 3.0 / 8.0


@dataclass(frozen=True)
class CycleTimeModel:
    mu: float
    sigma: float
    M: int
    S: int
    D: int
    rho: float = 0.0

    def __post_init__(self):
        if self.mu <= 0 or self.sigma < 0:
            raise ValueError("need mu > 0 and sigma >= 0")
        if self.M < 1 or self.S < 1 or self.D < 1:
            raise ValueError("M, S, D must be >= 1")
        if self.S % self.D:
            raise ValueError(f"S={self.S} is not a multiple of D={self.D}")
        if not 0 <= self.rho < 1:
            raise ValueError("rho must lie in [0, 1)")


def xi_max(M: int, alpha: float = BLOM_ALPHA) -> float:
    """Blom's approximation of E[max of M standard normals]."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return float(norm_ppf((M - alpha) / (M - 2 * alpha + 1)))


def expected_walltimes(m: CycleTimeModel) -> dict[str, float]:
    if m.rho != 0:
        raise ValueError("closed form assumes independent cycle times (rho == 0); use montecarlo_walltimes")
    xi = xi_max(m.M)
    sync_conv = m.S * xi * m.sigma
    sync_struc = m.S * xi * m.sigma / math.sqrt(m.D)
    return {
        "xi_M": xi,
        "E_conv": m.S * m.mu + sync_conv,
        "E_struc": m.S * m.mu + sync_struc,
        "E_sync_conv": sync_conv,
        "E_sync_struc": sync_struc,
        "sync_ratio": 1.0 / math.sqrt(m.D),
    }


def window_sums(times: np.ndarray, period: int) -> np.ndarray:
    """Per-rank sums over consecutive windows of ``period`` cycles, shape (M, S // period)."""
    M, S = times.shape
    if S % period:
        raise ValueError(f"{S} cycles do not split into windows of {period}")
    return times.reshape(M, S // period, period).sum(axis=2)


def barrier_wall_time(times: np.ndarray, period: int) -> float:
    return float(window_sums(times, period).max(axis=0).sum())


def barrier_sync_time(times: np.ndarray, period: int) -> float:
    """Rank-averaged waiting time at the barriers: sum over windows of mean(max - own)."""
    w = window_sums(times, period)
    return float((w.max(axis=0) - w.mean(axis=0)).sum())


def sample_cycle_times(rng: np.random.Generator, m: CycleTimeModel) -> np.ndarray:
    eps = rng.standard_normal((m.M, m.S))
    if m.rho:
        x = np.empty_like(eps)
        x[:, 0] = eps[:, 0]  # stationary start
        scale = math.sqrt(1.0 - m.rho ** 2)
        for s in range(1, m.S):
            x[:, s] = m.rho * x[:, s - 1] + scale * eps[:, s]
        eps = x
    return m.mu + m.sigma * eps


def _cv(x: np.ndarray) -> float:
    return float(x.std() / x.mean())


@dataclass
class MonteCarloResult:
    """Per-replicate samples of the quantities in :func:`expected_walltimes`."""

    T_conv: np.ndarray
    T_struc: np.ndarray
    sync_conv: np.ndarray
    sync_struc: np.ndarray
    CV_conv: np.ndarray
    CV_struc: np.ndarray

    FIELDS = ("T_conv", "T_struc", "sync_conv", "sync_struc", "CV_conv", "CV_struc")

    @property
    def sync_ratio(self) -> float:
        return float(self.sync_struc.mean() / self.sync_conv.mean()) if self.sync_conv.mean() else float("nan")

    @property
    def cv_ratios(self) -> np.ndarray:
        return self.CV_struc / self.CV_conv

    def means(self) -> dict[str, float]:
        return {k: float(getattr(self, k).mean()) for k in self.FIELDS}

    def standard_errors(self) -> dict[str, float]:
        n = len(self.T_conv)
        return {k: float(getattr(self, k).std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
                for k in self.FIELDS}


def montecarlo_walltimes(m: CycleTimeModel, replicates: int, rng_seed: int) -> MonteCarloResult:
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    out = {k: np.empty(replicates) for k in MonteCarloResult.FIELDS}
    for i, ss in enumerate(np.random.SeedSequence(rng_seed).spawn(replicates)):
        t = sample_cycle_times(np.random.default_rng(ss), m)
        out["T_conv"][i] = barrier_wall_time(t, 1)
        out["T_struc"][i] = barrier_wall_time(t, m.D)
        out["sync_conv"][i] = barrier_sync_time(t, 1)
        out["sync_struc"][i] = barrier_sync_time(t, m.D)
        out["CV_conv"][i] = _cv(t)
        out["CV_struc"][i] = _cv(window_sums(t, m.D))
    return MonteCarloResult(**out)


def max_quantile_probability(p: float, M: int) -> float:
    """Probability that the maximum of ``M`` draws falls in a tail of mass ``p``."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    if p == 1:
        return 1.0
    return float(-math.expm1(M * math.log1p(-p)))


def empirical_max_quantile_fraction(p: float, M: int, n_cycles: int, rng_seed: int,
                                    chunk: int = 10_000) -> float:
    """Fraction of simulated cycles whose maximum over ``M`` normals lies in the top-``p`` tail."""
    q = norm_ppf(1.0 - p)
    rng = np.random.default_rng(rng_seed)
    hits = 0
    for start in range(0, n_cycles, chunk):
        n = min(chunk, n_cycles - start)
        hits += int(np.count_nonzero(rng.standard_normal((n, M)).max(axis=1) >= q))
    return hits / n_cycles


def expected_max_normal_mc(M: int, replicates: int, rng_seed: int, chunk: int = 20_000) -> tuple[float, float]:
    """Monte-Carlo mean and standard error of the maximum of ``M`` standard normals."""
    rng = np.random.default_rng(rng_seed)
    total = total_sq = 0.0
    for start in range(0, replicates, chunk):
        n = min(chunk, replicates - start)
        mx = rng.standard_normal((n, M)).max(axis=1)
        total += mx.sum()
        total_sq += (mx ** 2).sum()
    mean = total / replicates
    var = max(total_sq / replicates - mean ** 2, 0.0)
    return mean, math.sqrt(var / replicates)
