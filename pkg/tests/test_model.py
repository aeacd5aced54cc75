import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from areasim.model import (
    NEVER, BenchmarkParams, DelayDist, NetworkSpec, TimeGrid, fire_interval_steps,
    generate_benchmark, generate_heterogeneous, sample_delays,
)


def test_grid_derived_quantities():
    g = TimeGrid(10, 2, 10, 100)
    assert (g.D, g.S, g.T_model_ms) == (5, 50, 10.0)


@pytest.mark.parametrize("args", [(10, 0, 10, 100), (10, 3, 10, 99), (10, 2, 9, 100), (10, 2, 10, 101)])
def test_grid_rejects_bad_values(args):
    with pytest.raises(ValueError):
        TimeGrid(*args)


def test_fire_interval():
    assert fire_interval_steps(10.0, 10) == 1000
    assert fire_interval_steps(0.0, 10) == NEVER
    with pytest.raises(ValueError):
        fire_interval_steps(20000.0, 10)


def test_neuron_spec_fires_on_schedule(toy_net):
    n = toy_net.neuron(0)
    times = [t for t in range(3 * n.fire_interval_steps) if n.fires_at(t)]
    assert len(times) == 3 and np.all(np.diff(times) == n.fire_interval_steps)


def test_benchmark_degrees_and_invariants(toy_net):
    toy_net.validate()
    intra, inter = toy_net.out_degrees()
    assert np.all(intra == 1) and np.all(inter == 1)
    assert toy_net.n_synapses == 12 * 2
    for s in toy_net.synapses:
        same = toy_net.area_of[s.source_id] == toy_net.area_of[s.target_id]
        assert s.range_class == ("intra" if same else "inter")


def test_generation_is_reproducible(toy_params):
    assert generate_benchmark(toy_params) == generate_benchmark(toy_params)
    other = generate_benchmark(replace(toy_params, rng_seed=13))
    assert not np.array_equal(other.target, generate_benchmark(toy_params).target)


def test_delays_are_clamped_at_cutoff():
    rng = np.random.default_rng(0)
    d = sample_delays(rng, 10_000, DelayDist(5.0, 2.5), 10, 10)
    assert d.min() == 10 and abs(d.mean() - 52) < 2


def test_validate_catches_broken_invariants(toy_net):
    bad = replace(toy_net, delay=toy_net.delay.copy())
    bad.delay[bad.inter] = 1
    with pytest.raises(ValueError, match="inter-area delay"):
        bad.validate()
    selfc = replace(toy_net, target=toy_net.source.copy())
    with pytest.raises(ValueError):
        selfc.validate()


def test_json_round_trip(tmp_path, toy_net):
    p = tmp_path / "net.json"
    toy_net.save(p)
    assert NetworkSpec.load(p) == toy_net
    doc = json.loads(p.read_text())
    assert set(doc) >= {"grid", "areas", "neurons", "synapses"}


def test_single_spike_copy(toy_net):
    T = toy_net.grid.T_model_steps
    emit = np.arange(toy_net.n_neurons) * 7 % T
    one = toy_net.with_single_spike(emit)
    for i in range(one.n_neurons):
        n = one.neuron(i)
        assert [t for t in range(T) if n.fires_at(t)] == [emit[i]]


def test_heterogeneous_metadata_and_floor():
    p = BenchmarkParams(n_areas=8, neurons_per_area=50, k_intra=10, k_inter=5, grid=TimeGrid(10, 1, 10, 100),
                        rate_hz=20.0, rng_seed=3)
    net = generate_heterogeneous(p, cv_area_size=0.9, cv_rate=0.3)
    net.validate()
    assert net.area_sizes.min() >= 11
    assert net.metadata["realized_cv_area_size"] > 0
    flat = generate_heterogeneous(p)
    assert np.all(flat.area_sizes == 50)


def test_k_intra_must_fit_area():
    with pytest.raises(ValueError):
        generate_benchmark(BenchmarkParams(neurons_per_area=5, k_intra=5))


@settings(max_examples=25, deadline=None)
@given(n_areas=st.integers(1, 5), per=st.integers(3, 30), seed=st.integers(0, 2**31),
       D=st.sampled_from([1, 2, 5]))
def test_generated_networks_always_validate(n_areas, per, seed, D):
    k_inter = 2 if n_areas > 1 else 0
    p = BenchmarkParams(n_areas=n_areas, neurons_per_area=per, k_intra=2, k_inter=k_inter,
                        grid=TimeGrid(10, 2, 2 * D, 20 * D), rate_hz=100.0, rng_seed=seed)
    net = generate_benchmark(p)
    net.validate()
    intra, inter = net.out_degrees()
    assert np.all(intra == 2) and np.all(inter == k_inter)
