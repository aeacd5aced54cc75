"""Experiment drivers: sweep points, per-run artifacts, summaries and manifest."""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import replace
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import analysis
from .config import ExperimentConfig, NetworkConfig
from .engine import CostParams, RunOptions, RunResult, run
from .model import generate_benchmark, generate_heterogeneous
from .partition import STRUCTURE_AWARE, make_plan
from .tables import LONG, SHORT

log = logging.getLogger(__name__)

BREAKDOWN = ("update", "deliver", "collocate", "sync_proxy", "exchange_estimate", "proxy_wall", "proxy_rtf")


def _finite(obj: Any) -> Any:
    """Replace NaN/inf by None so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if np.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _dump(obj: Any, path: Path) -> None:
    path.write_text(json.dumps(_finite(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


# heatmap -----------------------------------------------------------------

def emit_heatmap_csv(matrix: np.ndarray, path: str | Path, *, scheme: str = "", period: int = 1) -> tuple[Path, Path]:
    """Write a dense rank x cycle matrix and its long-format companion.

    The dense file starts with a ``#`` metadata row listing the cycles that
    end with a global exchange.
    """
    path = Path(path)
    long_path = path.with_name(path.stem + "_long.csv")
    M, S = matrix.shape
    boundaries = [c for c in range(S) if (c + 1) % period == 0]
    with open(path, "w", newline="") as f:
        f.write(f"# scheme={scheme} period={period} n_global_exchanges={len(boundaries)} "
                f"global_exchange_cycles={';'.join(map(str, boundaries))}\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["rank", *range(S)])
        for r in range(M):
            w.writerow([r, *(float(v) for v in matrix[r])])
    with open(long_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["rank", "cycle", "value", "global_exchange"])
        for r in range(M):
            for c in range(S):
                w.writerow([r, c, float(matrix[r, c]), int((c + 1) % period == 0)])
    return path, long_path


def read_heatmap_csv(path: str | Path) -> np.ndarray:
    with open(path) as f:
        rows = [row for row in csv.reader(line for line in f if not line.startswith("#"))]
    return np.array([[float(v) for v in row[1:]] for row in rows[1:]])


# point summaries -----------------------------------------------------------

def summarize_proxy(proxy: np.ndarray, period: int, T_model_ms: float, exchange_estimate: float = 0.0) -> dict[str, float]:
    wall = analysis.barrier_wall_time(proxy, period) + exchange_estimate
    return {
        "sync_proxy": analysis.barrier_sync_time(proxy, period),
        "exchange_estimate": exchange_estimate,
        "proxy_wall": wall,
        "proxy_rtf": wall / T_model_ms,
    }


def summarize_run(result: RunResult, cost: CostParams, alpha: float = 0.0, beta: float = 0.0) -> dict[str, Any]:
    m = result.metrics
    M = result.M
    proxy = result.proxy_matrix(cost)
    deliveries, irregular = m.n_deliveries.sum(axis=0), m.n_irregular.sum(axis=0)
    global_events = [e for e in m.events if e.kind == "global"]
    exchange_estimate = sum(alpha + beta * e.bytes / M for e in global_events)
    out = {
        "update": float((cost.c_update * m.n_updates).sum(axis=1).mean()),
        "deliver": float((cost.c_miss * irregular + cost.c_hit * (deliveries - irregular)).sum(axis=1).mean()),
        "collocate": float((cost.c_collocate * m.n_collocated.sum(axis=0)).sum(axis=1).mean()),
        **summarize_proxy(proxy, result.plan.global_exchange_period_cycles, result.net.grid.T_model_ms, exchange_estimate),
        "n_global_exchanges": m.n_global_exchanges,
        "n_local_exchanges": m.n_local_exchanges,
        "n_resize_rounds": m.n_resize_rounds,
        "bytes_global": m.bytes("global"),
        "bytes_local": m.bytes("local"),
        "n_deliveries": int(m.n_deliveries.sum()),
        "n_spikes_emitted": int(m.n_spikes_emitted.sum()),
    }
    f = analysis.f_irr_engine(m)
    out["f_irr_engine"] = f["combined"]
    out["f_irr_engine_intra"] = f["short"]
    out["f_irr_engine_inter"] = f["long"]
    return out


def aggregate(points: Iterable[dict[str, float]]) -> dict[str, dict[str, float]]:
    """Mean and sample sd over seeds for every numeric key; undefined values are skipped."""
    points = list(points)
    out = {}
    for key in points[0]:
        vals = np.array([p[key] for p in points if p[key] is not None], dtype=float)
        vals = vals[np.isfinite(vals)]
        if len(vals) == 0:
            out[key] = {"mean": None, "sd": None}
            continue
        out[key] = {
            "mean": float(np.mean(vals)),
            "sd": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
        }
    return out


# network construction ------------------------------------------------------

def network_for(net_cfg: NetworkConfig, seed: int):
    p = net_cfg.benchmark_params(seed)
    if net_cfg.cv_area_size or net_cfg.cv_rate:
        return generate_heterogeneous(p, net_cfg.cv_area_size, net_cfg.cv_rate)
    return generate_benchmark(p)


def _point_network(cfg: ExperimentConfig, value) -> NetworkConfig:
    n = cfg.network
    if cfg.experiment == "weak_scaling":
        return replace(n, n_areas=int(value))
    if cfg.experiment == "cv_area_sweep":
        return replace(n, cv_area_size=float(value))
    if cfg.experiment == "cv_rate_sweep":
        return replace(n, cv_rate=float(value))
    if cfg.experiment == "d_sweep":
        return replace(n, d_min_inter_steps=int(value) * n.d_min_steps)
    return n


def _fmt(value) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


# runner ------------------------------------------------------------------

class Runner:
    def __init__(self, cfg: ExperimentConfig, out_dir: str | Path | None = None):
        self.cfg = cfg
        self.out = Path(out_dir or cfg.output_dir)
        self.manifest_path = self.out / "manifest.json"

    def _load_manifest(self) -> dict[str, Any]:
        digest = self.cfg.digest()
        if self.manifest_path.exists():
            man = json.loads(self.manifest_path.read_text())
            if man.get("config_digest") == digest:
                return man
            log.warning("config changed since last run; starting over in %s", self.out)
        return {"config_digest": digest, "experiment": self.cfg.experiment, "completed": [], "status": "running"}

    def _save_manifest(self, man: dict[str, Any]) -> None:
        man["updated_at"] = time.strftime("%Y-%m-%dT%H:%M:%S")  # only timestamp in the artifact set
        _dump(man, self.manifest_path)

    def run(self) -> dict[str, Any]:
        self.out.mkdir(parents=True, exist_ok=True)
        _dump(self.cfg.to_dict(), self.out / "config.json")
        man = self._load_manifest()
        man["status"] = "running"
        self._save_manifest(man)
        if self.cfg.experiment == "theory_check":
            summary = self._theory_check()
        elif self.cfg.experiment == "access_check":
            summary = self._access_check(man)
        else:
            summary = self._sweep(man)
        summary = _finite(summary)
        _dump(summary, self.out / "summary.json")
        man["status"] = "complete"
        self._save_manifest(man)
        return summary

    # network-driven experiments ------------------------------------------------
    def _sweep(self, man: dict[str, Any]) -> dict[str, Any]:
        cfg = self.cfg
        values = cfg.sweep if cfg.experiment != "single_run" else [None]
        summary: dict[str, Any] = {"experiment": cfg.experiment, "points": []}
        for value in values:
            net_cfg = _point_network(cfg, value)
            per_scheme: dict[str, list] = {s: [] for s in cfg.partition.schemes}
            for seed in cfg.seeds:
                pid = (f"value={_fmt(value)}/" if value is not None else "") + f"seed={seed}"
                point = self._point(pid, net_cfg, seed, man)
                for s in cfg.partition.schemes:
                    per_scheme[s].append(point[s])
            summary["points"].append({
                "value": value,
                "schemes": {s: aggregate(v) for s, v in per_scheme.items()},
            })
        return summary

    def _point(self, pid: str, net_cfg: NetworkConfig, seed: int, man: dict[str, Any]) -> dict[str, Any]:
        pdir = self.out / "points" / pid
        point_file = pdir / "point.json"
        if pid in man["completed"] and point_file.exists():
            log.info("skip %s (done)", pid)
            return json.loads(point_file.read_text())
        log.info("run %s", pid)
        pdir.mkdir(parents=True, exist_ok=True)
        cfg = self.cfg
        net = network_for(net_cfg, seed)
        opts = RunOptions(
            rng_seed=seed, workers=cfg.engine.workers, initial_capacity=cfg.engine.initial_capacity,
            id_bytes=cfg.engine.id_bytes, offset_bytes=cfg.engine.offset_bytes,
        )
        point: dict[str, Any] = {"network": {k: v for k, v in net.metadata.items()}}
        run_id = pid.replace("/", ";")
        metrics_rows, exchange_rows = [], []
        for scheme in cfg.partition.schemes:
            plan = make_plan(net, scheme, cfg.partition.threads_per_rank)
            result = run(net, plan, opts)
            point[scheme] = summarize_run(result, cfg.cost_params, cfg.exchange_cost.alpha_per_call,
                                          cfg.exchange_cost.beta_per_byte)
            if scheme == STRUCTURE_AWARE:
                point[scheme]["frozen_fraction"] = plan.metadata["frozen_fraction"]
            metrics_rows.extend(result.metric_rows(run_id, cfg.cost_params))
            exchange_rows.extend(result.exchange_rows(run_id))
            emit_heatmap_csv(result.proxy_matrix(cfg.cost_params), pdir / f"proxy_{scheme}.csv",
                             scheme=scheme, period=plan.global_exchange_period_cycles)
            if cfg.experiment == "single_run":
                plan.save(pdir / f"plan_{scheme}.json")
        if cfg.experiment == "single_run":
            net.save(pdir / "network.json")
        _write_rows(pdir / "metrics.csv", metrics_rows)
        _write_rows(pdir / "exchanges.csv", exchange_rows)
        _dump(point, point_file)
        man["completed"].append(pid)
        self._save_manifest(man)
        return point

    # analysis-driven experiments ----------------------------------------------
    def _theory_check(self) -> dict[str, Any]:
        th = self.cfg.theory
        seed = self.cfg.seeds[0]
        rows = []
        for M in th.M:
            xi = analysis.xi_max(M)
            mc, se = analysis.expected_max_normal_mc(M, th.xi_replicates, seed)
            rows.append(_row("xi_M", {"M": M}, xi, mc, se))
            p_max = analysis.max_quantile_probability(th.tail_mass, M)
            frac = analysis.empirical_max_quantile_fraction(th.tail_mass, M, th.max_cycles, seed)
            rows.append(_row("p_max_tail", {"M": M, "p": th.tail_mass}, p_max, frac,
                             float(np.sqrt(frac * (1 - frac) / th.max_cycles))))
            for D in th.D:
                model = analysis.CycleTimeModel(th.mu, th.sigma, M, th.S, D, th.rho)
                res = analysis.montecarlo_walltimes(model, th.replicates, seed)
                means, ses = res.means(), res.standard_errors()
                analytic = analysis.expected_walltimes(replace(model, rho=0.0))
                params = {"M": M, "D": D, "rho": th.rho}
                rows.append(_row("sync_ratio", params, analytic["sync_ratio"], res.sync_ratio, float("nan")))
                rows.append(_row("cv_ratio", params, analytic["sync_ratio"], float(res.cv_ratios.mean()),
                                 float(res.cv_ratios.std(ddof=1) / np.sqrt(len(res.cv_ratios))) if len(res.cv_ratios) > 1 else float("nan")))
                for key, mkey in (("E_conv", "T_conv"), ("E_struc", "T_struc"),
                                  ("E_sync_conv", "sync_conv"), ("E_sync_struc", "sync_struc")):
                    rows.append(_row(key, params, analytic[key], means[mkey], ses[mkey]))
        _write_rows(self.out / "theory.csv", [{**r, "params": json.dumps(r["params"], sort_keys=True)} for r in rows])
        return {"experiment": "theory_check", "model_params": vars(th) | {"rng_seed": seed}, "rows": rows}

    def _access_check(self, man: dict[str, Any]) -> dict[str, Any]:
        cfg = self.cfg
        n = cfg.network
        rows = []
        for M in cfg.access.M:
            for T_M in cfg.access.T_M:
                params = analysis.AccessModelParams.weak_scaling(
                    n.neurons_per_area, M, T_M, n.k_intra + n.k_inter, n.k_intra, n.k_inter)
                analytic = {"conventional": analysis.f_irr_conventional(params)}
                if M >= 2:
                    analytic["structure_aware"] = analysis.f_irr_structure_aware(params)
                for seed in cfg.seeds:
                    net = generate_benchmark(replace(n, n_areas=M, cv_area_size=0.0, cv_rate=0.0).benchmark_params(seed))
                    for scheme, value in analytic.items():
                        plan = make_plan(net, scheme, T_M)
                        brute = analysis.f_irr_bruteforce(net, plan)["combined"]
                        row = _row("f_irr", {"M": M, "T_M": T_M, "scheme": scheme, "seed": seed}, value, brute, float("nan"))
                        if cfg.access.engine_check:
                            row["engine"] = one_spike_engine_fraction(net, plan)
                            row["engine_matches_bruteforce"] = row["engine"] == brute
                        rows.append(row)
        _write_rows(self.out / "access.csv", [{**r, "params": json.dumps(r["params"], sort_keys=True)} for r in rows])
        return {"experiment": "access_check", "rows": rows}


def one_spike_engine_fraction(net, plan) -> float:
    """Engine irregular fraction on a run where every neuron fires once at step 0."""
    g = net.grid
    horizon = int(net.delay.max()) + g.d_min_inter_steps + 1
    T = -(-horizon // g.d_min_inter_steps) * g.d_min_inter_steps
    grid = replace(g, T_model_steps=T)
    single = replace(net, grid=grid).with_single_spike(np.zeros(net.n_neurons, dtype=np.int64))
    result = run(single, plan, RunOptions())
    return analysis.f_irr_engine(result.metrics)["combined"]


def _row(quantity: str, params: dict, analytic: float, oracle: float, oracle_se: float) -> dict[str, Any]:
    rel = abs(oracle - analytic) / abs(analytic) if analytic else (0.0 if oracle == analytic else float("inf"))
    return {"quantity": quantity, "params": params, "analytic": float(analytic), "oracle": float(oracle),
            "oracle_se": float(oracle_se), "relative_error": float(rel)}


def _write_rows(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> dict[str, Any]:
    return Runner(cfg, out_dir).run()
