"""Pairwise scoring, ROC sweeps, baseline polyline, artifact writers.

Confusion counts are checked against explicit double loops; ROC geometry
against hand-computable instances and rank-invariance properties.
"""
from __future__ import annotations

import dataclasses
import itertools
import math

import numpy as np
import pytest

import rdsvi as rv
from tests.conftest import make_run

PEN = rv.PenaltyConfig(omega=1.0, p=1.0)
TM = rv.Exponential(1.0)


def adj_from_edges(n, edges):
    bits = np.zeros((n, n), dtype=bool)
    for i, j in edges:
        bits[i, j] = bits[j, i] = True
    return rv.AdjacencyMatrix(bits)


@pytest.fixture(scope="module")
def scored():
    run = make_run(n=12, seed=5)
    res = rv.infer(run.observed, PEN, TM, bound="upper")
    return run, res


# --- confusion counts ---------------------------------------------------------------


def test_confusion_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(25):
        n = int(rng.integers(2, 9))
        pred = adj_from_edges(
            n, [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.4]
        )
        truth = adj_from_edges(
            n, [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.4]
        )
        c = rv.confusion(pred, truth)
        tp = fp = fn = tn = 0
        for i in range(n):
            for j in range(i + 1, n):
                p, t = pred.bits[i, j], truth.bits[i, j]
                tp += p and t
                fp += p and not t
                fn += t and not p
                tn += not p and not t
        assert (c.tp, c.fp, c.fn, c.tn) == (tp, fp, fn, tn)
        assert c.pairs == n * (n - 1) // 2


def test_confusion_requires_same_n():
    with pytest.raises(ValueError, match="node set"):
        rv.confusion(adj_from_edges(3, []), adj_from_edges(4, []))


def test_tpr_fpr_standard():
    c = rv.ConfusionCounts(tp=3, fp=2, fn=1, tn=4)
    r = rv.tpr_fpr(c)
    assert r.tpr == pytest.approx(3 / 4)
    assert r.fpr == pytest.approx(2 / 6)
    assert not r.degenerate


def test_tpr_fpr_pair_normalized():
    c = rv.ConfusionCounts(tp=3, fp=2, fn=1, tn=4)
    r = rv.tpr_fpr(c, "pair-normalized")
    assert r.tpr == pytest.approx(3 / 10)
    assert r.fpr == pytest.approx(2 / 10)
    assert not r.degenerate


def test_tpr_fpr_degenerate_flags():
    assert rv.tpr_fpr(rv.ConfusionCounts(0, 2, 0, 4)).degenerate  # no positives
    assert rv.tpr_fpr(rv.ConfusionCounts(2, 0, 1, 0)).degenerate  # no negatives
    assert not rv.tpr_fpr(rv.ConfusionCounts(1, 1, 1, 1)).degenerate


def test_tpr_fpr_rejects_unknown_convention():
    with pytest.raises(ValueError, match="convention"):
        rv.tpr_fpr(rv.ConfusionCounts(1, 1, 1, 1), "exotic")


def test_corner_distance_frozen():
    assert rv.corner_distance(0.9, 0.1) == pytest.approx(math.sqrt(0.02), rel=1e-12)
    assert rv.corner_distance(1.0, 0.0) == 0.0
    assert rv.corner_distance(0.0, 0.0) == 1.0
    assert rv.corner_distance(0.0, 1.0) == pytest.approx(math.sqrt(2.0))


# --- ROC sweeps ----------------------------------------------------------------------


def test_roc_endpoints_standard(scored):
    run, res = scored
    curve = rv.roc(res, run.truth.adjacency)
    assert curve.tpr[0] == curve.fpr[0] == 0.0
    assert curve.tpr[-1] == curve.fpr[-1] == 1.0
    assert curve.zetas[0] == np.inf and curve.zetas[-1] == -np.inf
    assert not curve.degenerate


def test_roc_monotone(scored):
    run, res = scored
    curve = rv.roc(res, run.truth.adjacency)
    assert np.all(np.diff(curve.tpr) >= -1e-15)
    assert np.all(np.diff(curve.fpr) >= -1e-15)
    assert 0.0 <= curve.auc() <= 1.0


def test_roc_point_count(scored):
    run, res = scored
    curve = rv.roc(res, run.truth.adjacency)
    assert curve.zetas.shape[0] == np.unique(res.edge_weights).shape[0] + 3


def test_roc_second_point_is_revealed_only(scored):
    run, res = scored
    truth = run.truth.adjacency
    curve = rv.roc(res, truth)
    r = rv.tpr_fpr(rv.confusion(res.revealed, truth))
    assert curve.tpr[1] == pytest.approx(r.tpr)
    assert curve.fpr[1] == pytest.approx(r.fpr)  # revealed edges are all true


def test_roc_points_match_thresholded_reconstructions(scored):
    run, res = scored
    truth = run.truth.adjacency
    curve = rv.roc(res, truth)
    for k in range(1, curve.zetas.shape[0]):
        z = curve.zetas[k]
        r = rv.tpr_fpr(rv.confusion(rv.threshold(res, z), truth))
        assert curve.tpr[k] == pytest.approx(r.tpr, abs=1e-12)
        assert curve.fpr[k] == pytest.approx(r.fpr, abs=1e-12)


def test_roc_auc_invariant_under_monotone_transform(scored):
    run, res = scored
    truth = run.truth.adjacency
    base = rv.roc(res, truth).auc()
    warped = dataclasses.replace(
        res, edge_weights=np.arctan(res.edge_weights) * 3.0 + 1.0
    )
    assert rv.roc(warped, truth).auc() == pytest.approx(base, abs=1e-12)


def test_roc_tied_weights_collapse(scored):
    run, res = scored
    truth = run.truth.adjacency
    flat = dataclasses.replace(res, edge_weights=np.zeros_like(res.edge_weights))
    curve = rv.roc(flat, truth)
    # all free edges share one threshold: anchor, revealed point, single jump, end
    assert curve.zetas.shape[0] == 4
    assert curve.tpr[-2] == pytest.approx(1.0)
    assert curve.fpr[-2] == pytest.approx(1.0)


def test_roc_pair_normalized_endpoint_short_of_corner(scored):
    run, res = scored
    truth = run.truth.adjacency
    curve = rv.roc(res, truth, convention="pair-normalized")
    total = res.n * (res.n - 1) // 2
    pos = truth.edge_count
    assert curve.tpr[-1] == pytest.approx(pos / total)
    assert curve.fpr[-1] == pytest.approx((total - pos) / total)
    assert curve.tpr[-1] < 1.0  # sparse truth keeps the endpoint inside the box


def test_roc_requires_revealed_in_truth(scored):
    run, res = scored
    with pytest.raises(ValueError, match="revealed"):
        rv.roc(res, adj_from_edges(res.n, []))


def test_roc_hand_instance():
    # two free edges, one true, ranked correctly: curve passes the corner
    run = make_run(n=12, seed=5)
    res = rv.infer(run.observed, PEN, TM)
    truth = run.truth.adjacency
    labels = np.array([bool(truth.bits[i, j]) for i, j in res.free_edges])
    perfect = dataclasses.replace(
        res, edge_weights=np.where(labels, 1.0, -1.0)
    )
    curve = rv.roc(perfect, truth)
    assert curve.min_corner_distance() == pytest.approx(0.0, abs=1e-12)
    assert curve.auc() == pytest.approx(1.0, abs=1e-12)


def test_min_corner_distance_matches_pointwise(scored):
    run, res = scored
    curve = rv.roc(res, run.truth.adjacency)
    dists = [rv.corner_distance(t, f) for t, f in zip(curve.tpr, curve.fpr)]
    np.testing.assert_allclose(curve.corner_distances(), dists, rtol=1e-12)
    assert curve.min_corner_distance() == pytest.approx(min(dists))


# --- forest baseline ------------------------------------------------------------------


def test_forest_baseline_geometry(scored):
    run, _ = scored
    truth = run.truth.adjacency
    revealed = run.observed.revealed_adjacency()
    base = rv.forest_baseline(revealed, truth)
    assert base.tpr.shape == (3,)
    assert base.fpr[0] == base.tpr[0] == 0.0
    assert base.fpr[-1] == base.tpr[-1] == 1.0
    r = rv.tpr_fpr(rv.confusion(revealed, truth))
    assert base.tpr[1] == pytest.approx(r.tpr)
    assert base.fpr[1] == pytest.approx(r.fpr)
    assert base.fpr[1] == 0.0  # the forest contains no false edges


def test_forest_baseline_auc_closed_form(scored):
    run, _ = scored
    truth = run.truth.adjacency
    revealed = run.observed.revealed_adjacency()
    base = rv.forest_baseline(revealed, truth)
    t = base.tpr[1]
    assert base.auc() == pytest.approx(t + (1.0 - t) / 2.0, abs=1e-12)


def test_forest_baseline_pair_normalized_endpoint(scored):
    run, _ = scored
    truth = run.truth.adjacency
    revealed = run.observed.revealed_adjacency()
    base = rv.forest_baseline(revealed, truth, convention="pair-normalized")
    total = truth.n * (truth.n - 1) // 2
    assert base.tpr[-1] == pytest.approx(truth.edge_count / total)
    assert base.fpr[-1] == pytest.approx((total - truth.edge_count) / total)


def test_forest_baseline_requires_containment():
    truth = adj_from_edges(4, [(0, 1)])
    bad = adj_from_edges(4, [(2, 3)])
    with pytest.raises(ValueError, match="revealed"):
        rv.forest_baseline(bad, truth)


# --- artifacts -------------------------------------------------------------------------


def test_csv_round_trip(tmp_path, scored):
    run, res = scored
    curve = rv.roc(res, run.truth.adjacency)
    path = tmp_path / "roc.csv"
    rv.write_roc_csv(curve, str(path), header_comments=["cfg deadbeef"])
    back = rv.read_roc_csv(str(path))
    np.testing.assert_array_equal(back.zetas, curve.zetas)
    np.testing.assert_array_equal(back.fpr, curve.fpr)
    np.testing.assert_array_equal(back.tpr, curve.tpr)
    text = path.read_text()
    assert text.startswith("# cfg deadbeef\nzeta,fpr,tpr\n")


def test_csv_byte_deterministic(tmp_path, scored):
    run, res = scored
    curve = rv.roc(res, run.truth.adjacency)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    rv.write_roc_csv(curve, str(a))
    rv.write_roc_csv(curve, str(b))
    assert a.read_bytes() == b.read_bytes()


def test_svg_byte_deterministic_and_wellformed(tmp_path, scored):
    import xml.etree.ElementTree as ET

    run, res = scored
    truth = run.truth.adjacency
    curve = rv.roc(res, truth)
    base = rv.forest_baseline(run.observed.revealed_adjacency(), truth)
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    rv.write_roc_svg([("sweep", curve), ("forest", base)], str(a), header_comments=["x"])
    rv.write_roc_svg([("sweep", curve), ("forest", base)], str(b), header_comments=["x"])
    assert a.read_bytes() == b.read_bytes()
    root = ET.parse(str(a)).getroot()
    assert root.tag.endswith("svg")
    body = a.read_text()
    assert "polyline" in body and f"AUC {curve.auc():.3f}" in body
