import numpy as np
import pytest

from areasim.model import BenchmarkParams, TimeGrid, generate_benchmark

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def toy_params():
    return BenchmarkParams(
        n_areas=3, neurons_per_area=4, k_intra=1, k_inter=1,
        grid=TimeGrid(h_steps_per_ms=10, d_min_steps=1, d_min_inter_steps=10, T_model_steps=1000),
        rate_hz=100.0, rng_seed=12,
    )


@pytest.fixture
def toy_net(toy_params):
    return generate_benchmark(toy_params)


def small_net(seed=1, n_areas=4, per_area=60, k_intra=6, k_inter=6, dmin=1, D=5, cycles=60, rate=200.0):
    grid = TimeGrid(10, dmin, dmin * D, dmin * cycles)
    return generate_benchmark(BenchmarkParams(
        n_areas=n_areas, neurons_per_area=per_area, k_intra=k_intra, k_inter=k_inter,
        grid=grid, rate_hz=rate, rng_seed=seed,
    ))


def expected_deliveries(net):
    """Brute-force oracle: every (synapse, emission) pair arriving inside the run."""
    T = net.grid.T_model_steps
    rows = []
    for i in range(net.n_synapses):
        s = int(net.source[i])
        iv, ph = int(net.fire_interval[s]), int(net.fire_phase[s])
        if iv == 0 or net.frozen[s]:
            continue
        for t in range((-ph) % iv, T, iv):
            a = t + int(net.delay[i])
            if a < T:
                rows.append((s, int(net.target[i]), a))
    out = np.array(rows, dtype=[("source", np.int64), ("target", np.int64), ("arrival", np.int64)])
    return out[np.lexsort((out["source"], out["target"], out["arrival"]))] if len(out) else out
