import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from areasim.model import BenchmarkParams, TimeGrid, generate_heterogeneous
from areasim.partition import (
    CONVENTIONAL, STRUCTURE_AWARE, PartitionPlan, make_plan, plan_round_robin, plan_structure_aware,
)


def test_round_robin_layout(toy_net):
    plan = plan_round_robin(toy_net, 2, 2)
    assert [plan.assignment(g) for g in range(5)] == [(0, 0), (0, 1), (1, 0), (1, 1), (0, 0)]
    assert plan.global_exchange_period_cycles == 1


def test_structure_aware_one_area_per_rank(toy_net):
    plan = plan_structure_aware(toy_net, 3)
    assert plan.M == 3
    assert np.array_equal(plan.rank_of[:toy_net.n_neurons], toy_net.area_of)
    assert plan.global_exchange_period_cycles == toy_net.grid.D
    assert plan.metadata["frozen_fraction"] == 0


def test_ghost_padding():
    p = BenchmarkParams(n_areas=4, neurons_per_area=40, k_intra=3, k_inter=3, grid=TimeGrid(10, 1, 5, 50),
                        rate_hz=50.0, rng_seed=5)
    net = generate_heterogeneous(p, cv_area_size=0.4)
    plan = plan_structure_aware(net, 4)
    sizes = net.area_sizes
    assert np.all(plan.slots_per_rank() == sizes.max())
    ghosts = np.arange(net.n_neurons, plan.n_slots)
    assert plan.frozen[ghosts].all() and not plan.frozen[:net.n_neurons].any()
    assert plan.frozen_ids == set(ghosts.tolist())
    assert plan.metadata["frozen_fraction"] == pytest.approx(1 - sizes.mean() / sizes.max())
    plan.check_consistent(net)


def test_make_plan_dispatch(toy_net):
    assert make_plan(toy_net, CONVENTIONAL, 2).M == toy_net.n_areas
    assert make_plan(toy_net, CONVENTIONAL, 2, M=5).M == 5
    assert make_plan(toy_net, STRUCTURE_AWARE, 2).scheme == STRUCTURE_AWARE
    with pytest.raises(ValueError):
        make_plan(toy_net, STRUCTURE_AWARE, 2, M=7)
    with pytest.raises(ValueError):
        make_plan(toy_net, "spectral", 2)


def test_plan_round_trip(tmp_path, toy_net):
    plan = plan_structure_aware(toy_net, 2)
    plan.save(tmp_path / "plan.json")
    back = PartitionPlan.load(tmp_path / "plan.json")
    assert np.array_equal(back.rank_of, plan.rank_of) and np.array_equal(back.thread_of, plan.thread_of)
    assert back.D == plan.D and back.metadata == plan.metadata


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 300), M=st.integers(1, 9), T_M=st.integers(1, 5))
def test_round_robin_balances_threads(n, M, T_M):
    from areasim.model import generate_benchmark
    net = generate_benchmark(BenchmarkParams(n_areas=1, neurons_per_area=n, k_intra=0, k_inter=0,
                                             grid=TimeGrid(10, 1, 1, 10), rate_hz=10.0))
    plan = plan_round_robin(net, M, T_M)
    per_thread = np.bincount(plan.rank_of * T_M + plan.thread_of, minlength=M * T_M)
    assert per_thread.max() - per_thread.min() <= 1
