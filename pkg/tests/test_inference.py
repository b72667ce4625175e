"""Reconstruction pipeline: scoring, threshold sweep, selection, alternation.

Threshold selection is checked against brute-force sweeps of the same grid;
serialization against field-by-field equality after a disk round trip.
"""
from __future__ import annotations

import math

import numpy as np
import pytest

import rdsvi as rv
from tests.conftest import make_run

PEN = rv.PenaltyConfig(omega=1.0, p=1.0)
TM = rv.Exponential(1.0)


@pytest.fixture(scope="module")
def run():
    return make_run(n=12, seed=5)


@pytest.fixture(scope="module")
def res_upper(run):
    return rv.infer(run.observed, PEN, TM, bound="upper")


@pytest.fixture(scope="module")
def res_lower(run):
    return rv.infer(run.observed, PEN, TM, bound="lower")


def test_upper_result_shape(run, res_upper):
    codec, _ = rv.build_objective(run.observed, PEN, TM)
    assert res_upper.n == run.observed.n
    assert res_upper.edge_weights.shape == (len(codec.free_edges),)
    assert res_upper.count_weights.shape == (codec.n, codec.count_bits)
    assert res_upper.bound_kind in ("upper-grow", "upper-shrink", "upper-bar")
    assert isinstance(res_upper.anchor, tuple)
    assert set(res_upper.partitions) == {"grow", "shrink", "bar"}
    assert res_upper.oracle_calls > 0
    assert res_upper.wall_time > 0.0


def test_upper_uses_smallest_partition(res_upper):
    kind = res_upper.bound_kind.removeprefix("upper-")
    assert res_upper.partitions[kind] == pytest.approx(min(res_upper.partitions.values()))
    lo, hi = res_upper.log_partition_bracket
    assert hi == pytest.approx(res_upper.partitions[kind])


def test_bracket_ordered(res_upper, res_lower):
    for res in (res_upper, res_lower):
        lo, hi = res.log_partition_bracket
        assert math.isfinite(lo) and math.isfinite(hi)
        assert lo <= hi + 1e-9


def test_lower_result_shape(res_lower):
    assert res_lower.bound_kind == "lower"
    assert res_lower.anchor is None
    assert res_lower.partitions is None
    assert res_lower.converged


def test_infer_rejects_unknown_bound(run):
    with pytest.raises(ValueError, match="bound"):
        rv.infer(run.observed, PEN, TM, bound="sideways")


def test_infer_deterministic(run, res_upper):
    again = rv.infer(run.observed, PEN, TM, bound="upper")
    np.testing.assert_array_equal(again.edge_weights, res_upper.edge_weights)
    np.testing.assert_array_equal(again.count_weights, res_upper.count_weights)
    assert again.anchor == res_upper.anchor


def test_invalid_observed_rejected(run):
    obs = run.observed
    bad_times = obs.times.copy()
    if obs.n >= 3:
        bad_times[1], bad_times[2] = bad_times[2], bad_times[1]
    bad = rv.ObservedData(
        n=obs.n,
        seeds=obs.seeds,
        degrees=obs.degrees,
        times=bad_times,
        recruiters=obs.recruiters,
        coupons=obs.coupons,
    )
    with pytest.raises(rv.ObservedDataInvalid) as exc:
        rv.infer(bad, PEN, TM)
    assert exc.value.problems


# --- threshold sweep ----------------------------------------------------------------


def test_threshold_grid_shape(res_upper):
    grid = res_upper.threshold_grid
    assert grid[0] == -np.inf and grid[-1] == np.inf
    assert np.all(np.diff(grid[1:-1]) > 0)
    assert grid.shape[0] == np.unique(res_upper.edge_weights).shape[0] + 2


def test_threshold_endpoints(res_upper):
    at_inf = rv.threshold(res_upper, np.inf)
    assert at_inf == res_upper.revealed
    at_ninf = rv.threshold(res_upper, -np.inf)
    expect = set(res_upper.revealed.edge_set()) | {
        (min(i, j), max(i, j)) for (i, j) in res_upper.free_edges
    }
    assert set(at_ninf.edge_set()) == expect


def test_threshold_family_nested(res_upper):
    grid = res_upper.threshold_grid
    prev = None
    for zeta in grid.tolist():
        adj = rv.threshold(res_upper, zeta)
        edges = set(adj.edge_set())
        assert edges >= set(res_upper.revealed.edge_set())
        if prev is not None:
            assert edges <= prev  # ascending zeta shrinks the reconstruction
        prev = edges


def test_edge_marginals_are_logistic(res_upper):
    np.testing.assert_allclose(
        res_upper.edge_marginals,
        1.0 / (1.0 + np.exp(-res_upper.edge_weights)),
        rtol=1e-12,
    )


def test_pendant_estimate_bounds_and_decode(res_upper):
    u = res_upper.pendant_estimate
    assert u.shape == (res_upper.n,)
    assert np.all(u >= 0) and np.all(u <= res_upper.u_max)
    powers = 1 << np.arange(res_upper.count_bits, dtype=np.int64)
    raw = (res_upper.count_weights > 0.0) @ powers
    np.testing.assert_array_equal(u, np.clip(raw, 0, res_upper.u_max))


# --- threshold selection --------------------------------------------------------------


def test_select_threshold_with_truth_minimizes_corner(run, res_upper):
    truth = run.truth.adjacency
    _, objective = rv.build_objective(run.observed, PEN, TM)
    zeta, adj = rv.select_threshold(res_upper, objective, truth=truth)
    assert adj == rv.threshold(res_upper, zeta)
    r = rv.tpr_fpr(rv.confusion(adj, truth))
    chosen = rv.corner_distance(r.tpr, r.fpr)
    def corner_at(z):
        rr = rv.tpr_fpr(rv.confusion(rv.threshold(res_upper, z), truth))
        return rv.corner_distance(rr.tpr, rr.fpr)

    best = min(corner_at(z) for z in res_upper.threshold_grid.tolist())
    assert chosen == pytest.approx(best, abs=1e-12)


def test_select_threshold_unsupervised_matches_brute_force(run, res_upper):
    _, objective = rv.build_objective(run.observed, PEN, TM)
    zeta, adj = rv.select_threshold(res_upper, objective)
    assert adj == rv.threshold(res_upper, zeta)
    u_hat = res_upper.pendant_estimate
    codec = objective.codec
    best_val = -math.inf
    best_zeta = None
    for z in res_upper.threshold_grid[::-1].tolist():  # descending: ties stay sparse
        val = objective.value(codec.encode(rv.threshold(res_upper, z), u_hat))
        if val > best_val + 1e-12:
            best_val = val
            best_zeta = z
    assert zeta == best_zeta
    assert objective.value(codec.encode(adj, u_hat)) == pytest.approx(best_val, abs=1e-9)


def test_select_threshold_lower_bound_route(run, res_lower):
    _, objective = rv.build_objective(run.observed, PEN, TM)
    zeta, adj = rv.select_threshold(res_lower, objective)
    assert set(adj.edge_set()) >= set(res_lower.revealed.edge_set())


def test_diagnostics_interval(run):
    res = rv.infer(run.observed, PEN, TM, bound="upper", diagnostics=True)
    lo, hi = res.marginal_interval
    n_bits = len(res.free_edges) + res.n * res.count_bits
    assert lo.shape == hi.shape == (n_bits,)
    assert np.all(lo >= 0.0) and np.all(hi <= 1.0) and np.all(lo <= hi + 1e-12)


# --- alternation ---------------------------------------------------------------------


def test_alternate_single_round(run):
    out = rv.alternate(run.observed, PEN, TM, rounds=1)
    assert out.rounds_run == 1
    assert out.converged  # single round reports done by construction
    assert len(out.inference.theta_trajectory) == 2
    assert out.inference.theta_trajectory[0] == tuple(TM.params)
    assert all(p > 0 for p in out.model.params)
    assert set(out.adjacency.edge_set()) >= set(run.observed.revealed_adjacency().edge_set())


def test_alternate_stops_when_stable(run):
    out = rv.alternate(run.observed, PEN, TM, rounds=8, rel_tol=1e-3)
    assert 1 <= out.rounds_run <= 8
    assert len(out.inference.theta_trajectory) == out.rounds_run + 1
    if out.rounds_run < 8:
        assert out.converged


def test_alternate_with_truth(run):
    truth = run.truth.adjacency
    out = rv.alternate(run.observed, PEN, TM, rounds=2, truth=truth)
    assert truth.contains(out.adjacency) or set(out.adjacency.edge_set()) - set(truth.edge_set())
    assert out.selected_zeta in set(
        rv.infer(run.observed, PEN, out.inference.final_model, bound="upper").threshold_grid.tolist()
    ) or math.isinf(out.selected_zeta)


def test_alternate_rejects_zero_rounds(run):
    with pytest.raises(ValueError, match="rounds"):
        rv.alternate(run.observed, PEN, TM, rounds=0)


# --- serialization ---------------------------------------------------------------------


def _assert_result_equal(a, b):
    assert b.n == a.n
    assert b.revealed == a.revealed
    assert b.free_edges == a.free_edges
    assert b.u_max == a.u_max
    assert b.count_bits == a.count_bits
    assert b.bound_kind == a.bound_kind
    assert b.anchor == a.anchor
    assert b.offset == a.offset
    np.testing.assert_array_equal(b.edge_weights, a.edge_weights)
    np.testing.assert_array_equal(b.count_weights, a.count_weights)
    assert b.log_partition_bracket == a.log_partition_bracket
    assert b.partitions == a.partitions
    assert b.timing_family == a.timing_family
    assert b.theta_trajectory == a.theta_trajectory
    assert b.oracle_calls == a.oracle_calls
    assert b.converged == a.converged


def test_write_read_round_trip_upper(tmp_path, res_upper):
    path = tmp_path / "inf.txt"
    rv.write_inference(res_upper, str(path), header_comments=["trial"])
    _assert_result_equal(res_upper, rv.read_inference(str(path)))


def test_write_read_round_trip_lower(tmp_path, res_lower):
    path = tmp_path / "inf.txt"
    rv.write_inference(res_lower, str(path))
    _assert_result_equal(res_lower, rv.read_inference(str(path)))


def test_write_read_round_trip_weibull_trajectory(tmp_path, run):
    out = rv.alternate(run.observed, PEN, rv.Weibull(1.2, 0.8), rounds=2)
    path = tmp_path / "inf.txt"
    rv.write_inference(out.inference, str(path))
    back = rv.read_inference(str(path))
    _assert_result_equal(out.inference, back)
    assert back.final_model.params == out.model.params
