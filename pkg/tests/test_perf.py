import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from meshfab.fabric import Fabric, FabricConfig
from meshfab.perf import (CostParams, matvec_latency, matvec_sweep, pagerank_timesteps,
                          throughput_sweep, tiled_runtime, tiled_runtime_seconds)
from meshfab.scheduler import build_matvec, build_pagerank_iteration


def test_matvec_latency():
    assert matvec_latency(256) == 259
    assert matvec_latency(1) == 4
    assert matvec_latency(8192) == 8195


@pytest.mark.parametrize("n", [1, 2, 7, 16, 33, 63])
def test_matvec_latency_matches_simulator(n):
    cfg = FabricConfig(64, 64)
    s = build_matvec(np.ones((n, 3)), np.ones(3), cfg)
    assert Fabric(cfg).run(s).timesteps == matvec_latency(n)


def test_pagerank_timesteps():
    assert pagerank_timesteps(1000, 100) == 100_600
    assert pagerank_timesteps(4, 1) == 10
    assert pagerank_timesteps(4, 0) == 0


def test_pagerank_timesteps_match_simulator():
    cfg = FabricConfig(8, 8)
    H = np.full((4, 4), 0.25)
    s = build_pagerank_iteration(H, np.full(4, 0.25), 0.85, cfg)
    assert Fabric(cfg).run(s).timesteps == pagerank_timesteps(4, 1)


def test_headline_runtime():
    rt = tiled_runtime(5000, 100, CostParams(4096, 2e8))
    assert rt.fractional == pytest.approx(100 * (5000 / 64) ** 2 * 70 / 2e8)
    assert 0.2130 <= rt.fractional <= 0.2140
    assert round(rt.fractional * 1e3, 1) == 213.6
    assert rt.ceil == pytest.approx(100 * 79 ** 2 * 70 / 2e8)
    assert round(rt.ceil * 1e3, 1) == 218.4


def test_single_tile():
    assert tiled_runtime_seconds(64, 1) == pytest.approx(350e-9)


def test_sweep_start_point():
    assert tiled_runtime_seconds(1000, 100) == pytest.approx(8.544921875e-3)


def test_non_square_rejected():
    with pytest.raises(ValueError):
        tiled_runtime_seconds(100, 1, CostParams(sites=4000))


def test_unknown_model():
    with pytest.raises(ValueError):
        tiled_runtime_seconds(100, 1, model="pipelined")


@given(st.integers(1, 20_000), st.integers(1, 500), st.sampled_from(["fractional", "ceil"]))
def test_monotone(n, iters, model):
    f = lambda a, b: tiled_runtime_seconds(a, b, model=model)
    assert f(n + 1, iters) >= f(n, iters)
    assert f(n, iters + 1) > f(n, iters)
    if model == "fractional":
        assert f(n + 1, iters) > f(n, iters)


def test_sweep_csv():
    rows = matvec_sweep([256, 512]).splitlines()
    assert rows[0] == "N,n,S,f_hz,timesteps,seconds,model"
    assert rows[1].split(",")[4] == "259"
    assert throughput_sweep([]).splitlines() == ["N,n,S,f_hz,timesteps,seconds,model"]
    last = throughput_sweep([5000]).splitlines()[1].split(",")
    assert math.isclose(float(last[5]), 0.213623046875, rel_tol=1e-9)
