"""Scoring reconstructions against ground truth over unordered node pairs.

The ROC treats the edge weights as a ranking with every revealed edge scored
above all free edges, so the curve starts at the conventional (0, 0) anchor,
jumps to the revealed-only point, then walks the distinct weights downward to
(1, 1).  Two normalizations are supported: "standard" (positives and
negatives normalized separately) and "pair-normalized" (both divided by the
total number of unordered pairs, so the endpoint falls short of (1, 1) on
sparse truths).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph_core import AdjacencyMatrix
from .inference import InferenceResult

CONVENTIONS = ("standard", "pair-normalized")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def pairs(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(pred: AdjacencyMatrix, truth: AdjacencyMatrix) -> ConfusionCounts:
    if pred.n != truth.n:
        raise ValueError("predicted and true graphs must share the node set")
    iu = np.triu_indices(pred.n, k=1)
    p = pred.bits[iu]
    t = truth.bits[iu]
    return ConfusionCounts(
        tp=int(np.sum(p & t)),
        fp=int(np.sum(p & ~t)),
        fn=int(np.sum(~p & t)),
        tn=int(np.sum(~p & ~t)),
    )


@dataclass(frozen=True)
class RateResult:
    tpr: float
    fpr: float
    degenerate: bool


def tpr_fpr(counts: ConfusionCounts, convention: str = "standard") -> RateResult:
    """Rates under either normalization; degenerate flags an empty class."""
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    if convention == "pair-normalized":
        total = counts.pairs
        if total == 0:
            return RateResult(0.0, 0.0, True)
        return RateResult(counts.tp / total, counts.fp / total, False)
    pos = counts.tp + counts.fn
    neg = counts.fp + counts.tn
    degenerate = pos == 0 or neg == 0
    tpr = counts.tp / pos if pos else 0.0
    fpr = counts.fp / neg if neg else 0.0
    return RateResult(tpr, fpr, degenerate)


def corner_distance(tpr: float, fpr: float) -> float:
    """Euclidean distance to the perfect-classification corner (0, 1)."""
    return math.hypot(1.0 - tpr, fpr)


@dataclass(frozen=True)
class RocResult:
    zetas: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    convention: str
    degenerate: bool = False

    def auc(self) -> float:
        return float(np.trapezoid(self.tpr, self.fpr))

    def corner_distances(self) -> np.ndarray:
        return np.hypot(1.0 - self.tpr, self.fpr)

    def min_corner_distance(self) -> float:
        return float(self.corner_distances().min())


def _rates(tp: np.ndarray, fp: np.ndarray, pos: int, neg: int, total: int, convention: str):
    if convention == "pair-normalized":
        return tp / total, fp / total, False
    degenerate = pos == 0 or neg == 0
    tpr = tp / pos if pos else np.zeros_like(tp, dtype=np.float64)
    fpr = fp / neg if neg else np.zeros_like(fp, dtype=np.float64)
    return tpr, fpr, degenerate


def roc(
    res: InferenceResult,
    truth: AdjacencyMatrix,
    convention: str = "standard",
) -> RocResult:
    """Threshold sweep of the edge weights against the true adjacency."""
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    if truth.n != res.n:
        raise ValueError("truth has the wrong node count")
    if not truth.contains(res.revealed):
        raise ValueError("true adjacency must contain every revealed edge")
    labels = np.array([bool(truth.bits[i, j]) for i, j in res.free_edges], dtype=bool)
    w = res.edge_weights
    total = res.n * (res.n - 1) // 2
    revealed_count = res.revealed.edge_count
    pos = int(labels.sum()) + revealed_count
    neg = total - pos

    order = np.argsort(-w, kind="stable")
    sorted_w = w[order]
    sorted_lab = labels[order]
    # one point per distinct weight, cumulative counts at >= that weight
    if sorted_w.size:
        boundary = np.nonzero(np.diff(sorted_w))[0]
        last = np.concatenate([boundary, [sorted_w.size - 1]])
        distinct = sorted_w[last]
        cum_t = np.cumsum(sorted_lab)[last]
        cum_f = np.cumsum(~sorted_lab)[last]
    else:
        distinct = np.empty(0)
        cum_t = cum_f = np.empty(0, dtype=np.int64)

    zetas = np.concatenate(([np.inf, np.inf], distinct, [-np.inf]))
    tp = np.concatenate(([0, revealed_count], revealed_count + cum_t, [pos]))
    fp = np.concatenate(([0, 0], cum_f, [neg if convention == "standard" else total - pos]))
    tp = tp.astype(np.float64)
    fp = fp.astype(np.float64)
    tpr, fpr, degenerate = _rates(tp, fp, pos, neg, total, convention)
    if convention == "standard":
        # endpoints are exact by construction
        tpr[0] = fpr[0] = 0.0
        tpr[-1] = fpr[-1] = 1.0
    return RocResult(zetas=zetas, fpr=fpr, tpr=tpr, convention=convention, degenerate=degenerate)


def forest_baseline(
    revealed: AdjacencyMatrix,
    truth: AdjacencyMatrix,
    convention: str = "standard",
) -> RocResult:
    """Degenerate sweep for the recruitment forest alone.

    The forest admits only two operating points — keep just the revealed
    edges, or declare every pair an edge — joined into the polyline
    (0,0) -> (0, t) -> (1, 1).
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    if not truth.contains(revealed):
        raise ValueError("true adjacency must contain every revealed edge")
    c = confusion(revealed, truth)
    r = tpr_fpr(c, convention)
    zetas = np.array([np.inf, np.inf, -np.inf])
    tpr = np.array([0.0, r.tpr, 1.0])
    fpr = np.array([0.0, r.fpr, 1.0])
    if convention == "pair-normalized":
        full = tpr_fpr(
            ConfusionCounts(tp=c.tp + c.fn, fp=c.fp + c.tn, fn=0, tn=0), convention
        )
        tpr[-1] = full.tpr
        fpr[-1] = full.fpr
    return RocResult(zetas=zetas, fpr=fpr, tpr=tpr, convention=convention, degenerate=r.degenerate)


# --- artifact writers ----------------------------------------------------------


def write_roc_csv(res: RocResult, path: str, header_comments: Sequence[str] = ()) -> None:
    lines = [f"# {c}" for c in header_comments]
    lines.append("zeta,fpr,tpr")
    for z, x, y in zip(res.zetas.tolist(), res.fpr.tolist(), res.tpr.tolist()):
        lines.append(f"{z:.17g},{x:.17g},{y:.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_roc_csv(path: str) -> RocResult:
    zetas, fpr, tpr = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln or ln.startswith("#") or ln.startswith("zeta"):
                continue
            z, x, y = ln.split(",")
            zetas.append(float(z))
            fpr.append(float(x))
            tpr.append(float(y))
    return RocResult(
        zetas=np.array(zetas), fpr=np.array(fpr), tpr=np.array(tpr), convention="standard"
    )


_SVG_COLORS = ("#2166ac", "#b2182b", "#1b7837", "#762a83", "#e08214", "#35978f")


def _svg_coords(fpr: float, tpr: float) -> tuple[float, float]:
    left, top, width, height = 70.0, 40.0, 520.0, 380.0
    return left + fpr * width, top + (1.0 - tpr) * height


def write_roc_svg(
    curves: Sequence[tuple[str, RocResult]],
    path: str,
    title: str = "Edge recovery",
    header_comments: Sequence[str] = (),
) -> None:
    """Byte-deterministic standalone SVG 1.1 plot of one or more ROC curves."""
    left, top, width, height = 70.0, 40.0, 520.0, 380.0
    out = ['<?xml version="1.0" encoding="UTF-8"?>']
    out += [f"<!-- {c} -->" for c in header_comments]
    out.append(
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="640" height="480" '
        'viewBox="0 0 640 480">'
    )
    out.append('<rect x="0" y="0" width="640" height="480" fill="#ffffff"/>')
    out.append(
        f'<text x="{left + width / 2:.1f}" y="25" font-family="sans-serif" font-size="16" '
        f'text-anchor="middle">{title}</text>'
    )
    # frame and chance diagonal
    out.append(
        f'<rect x="{left:.1f}" y="{top:.1f}" width="{width:.1f}" height="{height:.1f}" '
        'fill="none" stroke="#333333" stroke-width="1"/>'
    )
    x0, y0 = _svg_coords(0.0, 0.0)
    x1, y1 = _svg_coords(1.0, 1.0)
    out.append(
        f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
        'stroke="#bbbbbb" stroke-width="1" stroke-dasharray="6,4"/>'
    )
    for k in range(6):
        v = k / 5.0
        gx, _ = _svg_coords(v, 0.0)
        _, gy = _svg_coords(0.0, v)
        out.append(
            f'<line x1="{gx:.2f}" y1="{top + height:.1f}" x2="{gx:.2f}" '
            f'y2="{top + height + 6:.1f}" stroke="#333333" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{gx:.2f}" y="{top + height + 22:.1f}" font-family="sans-serif" '
            f'font-size="12" text-anchor="middle">{v:.1f}</text>'
        )
        out.append(
            f'<line x1="{left - 6:.1f}" y1="{gy:.2f}" x2="{left:.1f}" y2="{gy:.2f}" '
            'stroke="#333333" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{left - 10:.1f}" y="{gy + 4:.2f}" font-family="sans-serif" '
            f'font-size="12" text-anchor="end">{v:.1f}</text>'
        )
    out.append(
        f'<text x="{left + width / 2:.1f}" y="470" font-family="sans-serif" font-size="14" '
        'text-anchor="middle">false positive rate</text>'
    )
    out.append(
        f'<text x="18" y="{top + height / 2:.1f}" font-family="sans-serif" font-size="14" '
        f'text-anchor="middle" transform="rotate(-90 18 {top + height / 2:.1f})">'
        "true positive rate</text>"
    )
    for k, (label, curve) in enumerate(curves):
        color = _SVG_COLORS[k % len(_SVG_COLORS)]
        pts = " ".join(
            f"{x:.3f},{y:.3f}"
            for x, y in (_svg_coords(a, b) for a, b in zip(curve.fpr.tolist(), curve.tpr.tolist()))
        )
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        ly = top + 18 + 18 * k
        out.append(
            f'<line x1="{left + width - 150:.1f}" y1="{ly:.1f}" x2="{left + width - 120:.1f}" '
            f'y2="{ly:.1f}" stroke="{color}" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{left + width - 114:.1f}" y="{ly + 4:.1f}" font-family="sans-serif" '
            f'font-size="12">{label} (AUC {curve.auc():.3f})</text>'
        )
    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")
