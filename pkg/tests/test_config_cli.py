import csv
import json
from pathlib import Path

import numpy as np
import pytest

from areasim import cli, experiments
from areasim.analysis import barrier_sync_time
from areasim.config import DEFAULT_SEEDS, ConfigError, ExperimentConfig, from_dict, load
from areasim.experiments import emit_heatmap_csv, read_heatmap_csv, run_experiment

SMALL_NET = {"n_areas": 3, "neurons_per_area": 30, "k_intra": 4, "k_inter": 4, "T_model_steps": 40,
             "d_min_inter_steps": 5, "rate_hz": 200.0}


def _cfg(**kw):
    return from_dict({"network": SMALL_NET, "seeds": [1, 2]} | kw)


def test_defaults():
    cfg = from_dict({})
    assert cfg.seeds == list(DEFAULT_SEEDS) and cfg.experiment == "single_run"
    assert isinstance(cfg, ExperimentConfig)


@pytest.mark.parametrize("doc, key", [
    ({"experiment": "nope"}, "experiment"),
    ({"network": {"n_areas": "eight"}}, "network.n_areas"),
    ({"network": {"neuron_count": 5}}, "network.neuron_count"),
    ({"network": {"k_intra": 2.5}}, "network.k_intra"),
    ({"seeds": []}, "seeds"),
    ({"experiment": "d_sweep", "sweep": []}, "sweep"),
    ({"experiment": "d_sweep", "sweep": [3], "network": {"T_model_steps": 10}}, "sweep"),
    ({"partition": {"schemes": ["metis"]}}, "partition.schemes"),
    ({"cost_params": {"c_miss": -1}}, "cost_params"),
    ({"network": {"d_min_inter_steps": 3, "d_min_steps": 2}}, "network"),
    ({"theory": {"M": []}, "experiment": "theory_check"}, "theory"),
])
def test_config_errors_name_the_key(doc, key):
    with pytest.raises(ConfigError) as e:
        from_dict(doc)
    assert e.value.key == key


def test_nested_delay_config():
    cfg = from_dict({"network": {"inter_delay": {"mean_ms": 3.0, "sd_ms": 1.0}}})
    assert cfg.network.inter_delay.mean_ms == 3.0


def test_heatmap_shape_and_markers(tmp_path):
    m = np.arange(40, dtype=float).reshape(4, 10)
    dense, long_ = emit_heatmap_csv(m, tmp_path / "h.csv", scheme="structure_aware", period=5)
    assert np.array_equal(read_heatmap_csv(dense), m)
    head = dense.read_text().splitlines()[0]
    assert head.startswith("#") and "global_exchange_cycles=4;9" in head
    with open(long_) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 40 and sum(int(r["global_exchange"]) for r in rows) == 4 * 2


def test_zero_variance_costs_give_constant_heatmap(tmp_path):
    cfg = _cfg(cost_params={"c_update": 1.0, "c_hit": 0.0, "c_miss": 0.0, "c_collocate": 0.0}, seeds=[3])
    run_experiment(cfg, tmp_path)
    for scheme in ("conventional", "structure_aware"):
        m = read_heatmap_csv(tmp_path / "points" / "seed=3" / f"proxy_{scheme}.csv")
        assert m.shape == (3, 40) and np.all(m == m[0, 0])


def _artifacts(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*"))
            if p.is_file() and p.name != "manifest.json"}


def test_rerun_is_byte_identical(tmp_path):
    cfg = _cfg(experiment="d_sweep", sweep=[1, 2])
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    a, b = _artifacts(tmp_path / "a"), _artifacts(tmp_path / "b")
    assert a == b and len(a) > 10


def test_summary_equals_recomputation_from_csv(tmp_path):
    cfg = _cfg(experiment="cv_area_sweep", sweep=[0.2])
    summary = run_experiment(cfg, tmp_path)
    per_seed = []
    for seed in cfg.seeds:
        with open(tmp_path / "points" / "value=0.2" / f"seed={seed}" / "metrics.csv") as f:
            rows = [r for r in csv.DictReader(f) if r["scheme"] == "structure_aware"]
        M = 1 + max(int(r["rank"]) for r in rows)
        S = 1 + max(int(r["cycle"]) for r in rows)
        proxy = np.zeros((M, S))
        for r in rows:
            proxy[int(r["rank"]), int(r["cycle"])] = float(r["proxy_time"])
        per_seed.append(barrier_sync_time(proxy, 5))
    stats = summary["points"][0]["schemes"]["structure_aware"]["sync_proxy"]
    assert stats["mean"] == pytest.approx(np.mean(per_seed), rel=1e-12)
    assert stats["sd"] == pytest.approx(np.std(per_seed, ddof=1), rel=1e-9)


def test_partial_run_resumes(tmp_path, monkeypatch):
    cfg = _cfg(experiment="cv_rate_sweep", sweep=[0.0, 0.1])
    out = tmp_path / "run"
    real = experiments.run
    calls = {"n": 0}

    def flaky(*a, **k):
        calls["n"] += 1
        if calls["n"] == 5:
            raise RuntimeError("simulated crash")
        return real(*a, **k)

    monkeypatch.setattr(experiments, "run", flaky)
    with pytest.raises(RuntimeError):
        run_experiment(cfg, out)
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "running" and len(man["completed"]) == 2

    def counting(*a, **k):
        calls["n"] += 1
        return real(*a, **k)

    calls["n"] = 0
    monkeypatch.setattr(experiments, "run", counting)
    run_experiment(cfg, out)
    assert calls["n"] == 2 * 2  # two unfinished points, both schemes
    assert json.loads((out / "manifest.json").read_text())["status"] == "complete"

    monkeypatch.setattr(experiments, "run", real)
    run_experiment(cfg, tmp_path / "fresh")
    assert _artifacts(out) == _artifacts(tmp_path / "fresh")


def test_theory_and_access_outputs(tmp_path):
    th = _cfg(experiment="theory_check",
              theory={"M": [8], "D": [2], "S": 200, "replicates": 3, "max_cycles": 2000, "xi_replicates": 2000})
    s = run_experiment(th, tmp_path / "t")
    qs = {r["quantity"] for r in s["rows"]}
    assert {"xi_M", "p_max_tail", "sync_ratio", "cv_ratio", "E_conv"} <= qs
    assert all({"analytic", "oracle", "relative_error"} <= set(r) for r in s["rows"])
    assert (tmp_path / "t" / "theory.csv").exists()

    ac = _cfg(experiment="access_check", access={"M": [2, 3], "T_M": [2]}, seeds=[5])
    s = run_experiment(ac, tmp_path / "a")
    assert len(s["rows"]) == 4 and all(r["engine_matches_bruteforce"] for r in s["rows"])


def test_cli_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"network": SMALL_NET, "seeds": [1]}))
    assert cli.main(["--config", str(good), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    assert (tmp_path / "o" / "summary.json").exists()

    assert cli.main(["--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"network": {"rate_hz": "fast"}}))
    assert cli.main(["--config", str(bad)]) == 2
    assert "network.rate_hz" in capsys.readouterr().err
    assert cli.main(["--config", str(good), "--seeds", "1,x"]) == 2
    (tmp_path / "broken.json").write_text("{")
    assert cli.main(["--config", str(tmp_path / "broken.json")]) == 2


def test_cli_overrides(tmp_path):
    cfgf = tmp_path / "c.json"
    cfgf.write_text(json.dumps({"network": SMALL_NET, "sweep": [1, 5]}))
    assert cli.main(["--config", str(cfgf), "--experiment", "d_sweep", "--seeds", "4",
                     "--out", str(tmp_path / "o"), "--quiet"]) == 0
    saved = load(tmp_path / "o" / "config.json")
    assert saved.experiment == "d_sweep" and saved.seeds == [4]
    s = json.loads((tmp_path / "o" / "summary.json").read_text())
    ng = [p["schemes"]["structure_aware"]["n_global_exchanges"]["mean"] for p in s["points"]]
    assert ng == [40, 8]


def test_weak_scaling_irregular_fraction_grows_slower(tmp_path):
    cfg = from_dict({"experiment": "weak_scaling", "sweep": [2, 4, 8], "seeds": [1],
                     "network": {"neurons_per_area": 300, "k_intra": 20, "k_inter": 20, "T_model_steps": 20,
                                 "rate_hz": 100.0}})
    s = run_experiment(cfg, tmp_path)
    f = {sc: [p["schemes"][sc]["f_irr_engine"]["mean"] for p in s["points"]]
         for sc in ("conventional", "structure_aware")}
    slope = {sc: np.polyfit([1, 2, 3], v, 1)[0] for sc, v in f.items()}
    assert 0 < slope["structure_aware"] < slope["conventional"]


def test_json_artifacts_are_strict(tmp_path):
    run_experiment(_cfg(seeds=[1]), tmp_path)

    def reject(token):
        raise ValueError(token)

    for p in tmp_path.rglob("*.json"):
        json.loads(p.read_text(), parse_constant=reject)
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["points"][0]["schemes"]["conventional"]["f_irr_engine_inter"] == {"mean": None, "sd": None}
