"""Shared fixtures: small simulated instances reused across test modules."""
from __future__ import annotations

import numpy as np
import pytest

import rdsvi as rv


@pytest.fixture(scope="session")
def small_graph():
    rng = np.random.default_rng(1)
    return rv.preferential_attachment_graph(60, 2, rng, closure=0.3)


@pytest.fixture(scope="session")
def small_run(small_graph):
    cfg = rv.RdsConfig(sample_size=12, timing=rv.Exponential(1.0), coupons=3, rng_seed=5)
    run = rv.simulate(small_graph, cfg)
    assert run.completed
    return run


@pytest.fixture(scope="session")
def small_obs(small_run):
    return small_run.observed


def make_run(n=10, seed=0, timing=None, coupons=3, graph_seed=1, nodes=60):
    """Fresh simulated instance for tests that need their own."""
    rng = np.random.default_rng(graph_seed)
    g = rv.preferential_attachment_graph(nodes, 2, rng, closure=0.3)
    cfg = rv.RdsConfig(
        sample_size=n,
        timing=timing if timing is not None else rv.Exponential(1.0),
        coupons=coupons,
        rng_seed=seed,
    )
    return rv.simulate(g, cfg)
