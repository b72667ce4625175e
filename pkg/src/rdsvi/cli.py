"""Batch front end: simulate, infer, eval, and pipeline subcommands.

Configuration is a flat key=value file mirrored by command-line flags (flags
win).  Every artifact embeds the resolved config hash, the master seed, and
the code version, and contains no timestamps, so identical invocations are
byte-identical.  Exit codes: 0 success, 2 validation failure, 3 solver
unconverged (results still written), 4 early termination.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import math
import os
import sys
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import __version__
from .baselines import forest_baseline
from .evaluation import CONVENTIONS, RocResult, corner_distance, roc, write_roc_csv, write_roc_svg
from .graph_core import GraphFormatError, load_edge_list
from .inference import (
    ObservedDataInvalid,
    alternate,
    infer,
    read_inference,
    write_inference,
)
from .likelihood import InsufficientDataError, PenaltyConfig
from .rds import (
    RdsConfig,
    read_observed,
    read_truth,
    simulate,
    split_seed,
    write_observed,
    write_truth,
)
from .timing import Exponential, Weibull


@dataclass(frozen=True)
class RunConfig:
    graph: str = ""
    n: int = 50
    coupons: int = 3
    seed_schedule: str = "0:1"  # comma-separated time:count entries
    timing: str = "exponential"
    rate: float = 1.0
    shape: float = 1.5
    scale: float = 1.0
    omega: float = 1.0
    p: float = 2.0
    bound: str = "upper"
    rounds: int = 1
    convention: str = "standard"
    replicates: int = 20
    jobs: int = 1
    seed: int = 0
    out: str = "out"
    gap_tol: float = 0.0  # 0 means the solver default

    def timing_model(self):
        if self.timing == "exponential":
            return Exponential(self.rate)
        if self.timing == "weibull":
            return Weibull(self.shape, self.scale)
        raise ValueError(f"timing must be 'exponential' or 'weibull', got {self.timing!r}")

    def penalty(self) -> PenaltyConfig:
        return PenaltyConfig(omega=self.omega, p=self.p)

    def schedule(self) -> tuple[tuple[float, int], ...]:
        entries = []
        for part in self.seed_schedule.split(","):
            t_s, _, c_s = part.partition(":")
            entries.append((float(t_s), int(c_s)))
        return tuple(entries)


def _coerce(name: str, raw: str):
    kind = {f.name: f.type for f in fields(RunConfig)}[name]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return math.inf if raw in ("inf", "Inf", "INF") else float(raw)
    return raw


def load_config(path: str, base: RunConfig = RunConfig()) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    updates = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, ln in enumerate(fh, 1):
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            key, eq, raw = ln.partition("=")
            key, raw = key.strip(), raw.strip()
            if not eq or key not in known:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            updates[key] = _coerce(key, raw)
    return replace(base, **updates)


def config_hash(cfg: RunConfig) -> str:
    """Hash of the result-determining fields (output path and job count excluded)."""
    skip = {"out", "jobs"}
    blob = "\n".join(f"{k}={v!r}" for k, v in sorted(asdict(cfg).items()) if k not in skip)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _headers(cfg: RunConfig, extra: tuple[str, ...] = ()) -> list[str]:
    return [
        f"config_hash {config_hash(cfg)}",
        f"master_seed {cfg.seed}",
        f"version rdsvi {__version__}",
        *extra,
    ]


def _add_config_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="flat key=value config file; flags override it")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type == "int":
            sp.add_argument(flag, type=int, default=None)
        elif f.type == "float":
            sp.add_argument(flag, type=lambda s: _coerce_f(s), default=None)
        else:
            sp.add_argument(flag, default=None)


def _coerce_f(raw: str) -> float:
    return math.inf if raw in ("inf", "Inf", "INF") else float(raw)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = load_config(args.config, cfg)
    updates = {}
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            updates[f.name] = val
    cfg = replace(cfg, **updates)
    if cfg.bound not in ("upper", "lower"):
        raise ValueError(f"bound must be 'upper' or 'lower', got {cfg.bound!r}")
    if cfg.convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}, got {cfg.convention!r}")
    cfg.timing_model()  # validates family and parameters
    cfg.schedule()
    return cfg


# --- subcommands ----------------------------------------------------------------


def cmd_simulate(cfg: RunConfig) -> int:
    g = load_edge_list(cfg.graph)
    rds_cfg = RdsConfig(
        sample_size=cfg.n,
        timing=cfg.timing_model(),
        coupons=cfg.coupons,
        seed_schedule=cfg.schedule(),
        rng_seed=cfg.seed,
    )
    run = simulate(g, rds_cfg)
    os.makedirs(cfg.out, exist_ok=True)
    headers = _headers(cfg)
    write_observed(run.observed, os.path.join(cfg.out, "observed.txt"), headers)
    write_truth(run.truth, os.path.join(cfg.out, "truth.txt"), headers)
    print(f"simulate: wrote {run.observed.n} subjects to {cfg.out}")
    if not run.completed:
        print(
            f"early termination: recruited {run.observed.n} of {run.requested_n} requested",
            file=sys.stderr,
        )
        return 4
    return 0


def cmd_infer(cfg: RunConfig, observed_path: str) -> int:
    obs = read_observed(observed_path)
    tm = cfg.timing_model()
    gap_tol = cfg.gap_tol if cfg.gap_tol > 0 else None
    if cfg.rounds > 1:
        alt = alternate(
            obs, cfg.penalty(), tm, rounds=cfg.rounds, bound=cfg.bound, gap_tol=gap_tol
        )
        res = alt.inference
        converged = alt.converged and res.converged
    else:
        res = infer(obs, cfg.penalty(), tm, bound=cfg.bound, gap_tol=gap_tol)
        converged = res.converged
    os.makedirs(cfg.out, exist_ok=True)
    out_path = os.path.join(cfg.out, "inference.txt")
    write_inference(res, out_path, _headers(cfg))
    lo, hi = res.log_partition_bracket
    print(
        f"infer: bound={res.bound_kind} log_partition_bracket=[{lo:.6g}, {hi:.6g}] "
        f"oracle_calls={res.oracle_calls} -> {out_path}"
    )
    if not converged:
        print("solver unconverged; results written", file=sys.stderr)
        return 3
    return 0


def cmd_eval(cfg: RunConfig, inference_path: str, truth_path: str) -> int:
    res = read_inference(inference_path)
    truth = read_truth(truth_path)
    truth_adj = truth.adjacency
    curve = roc(res, truth_adj, cfg.convention)
    base = forest_baseline(res.revealed, truth_adj, cfg.convention)
    os.makedirs(cfg.out, exist_ok=True)
    headers = _headers(cfg, (f"convention {cfg.convention}",))
    write_roc_csv(curve, os.path.join(cfg.out, "roc.csv"), headers)
    write_roc_csv(base, os.path.join(cfg.out, "roc_forest.csv"), headers)
    write_roc_svg(
        [("inference", curve), ("forest", base)],
        os.path.join(cfg.out, "roc.svg"),
        header_comments=headers,
    )
    summary = (
        f"auc {curve.auc():.17g}\n"
        f"auc_forest {base.auc():.17g}\n"
        f"min_corner_distance {curve.min_corner_distance():.17g}\n"
        f"corner_distance_forest {corner_distance(float(base.tpr[1]), float(base.fpr[1])):.17g}\n"
        f"convention {cfg.convention}\n"
        f"degenerate {int(curve.degenerate)}\n"
    )
    with open(os.path.join(cfg.out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write("".join(f"# {h}\n" for h in headers) + summary)
    print(summary, end="")
    return 0


def _replicate_dir(out: str, k: int) -> str:
    return os.path.join(out, f"rep_{k:04d}")


def _run_replicate(payload: tuple[dict, int]) -> dict:
    cfg_dict, k = payload
    cfg = RunConfig(**cfg_dict)
    rep_out = _replicate_dir(cfg.out, k)
    marker = os.path.join(rep_out, "rep.done")
    summary_path = os.path.join(rep_out, "summary.txt")
    if os.path.exists(marker) and os.path.exists(summary_path):
        return _read_rep_summary(summary_path, k)
    os.makedirs(rep_out, exist_ok=True)
    g = load_edge_list(cfg.graph)
    rds_cfg = RdsConfig(
        sample_size=cfg.n,
        timing=cfg.timing_model(),
        coupons=cfg.coupons,
        seed_schedule=cfg.schedule(),
        rng_seed=cfg.seed,
    )
    rng = np.random.default_rng(split_seed(cfg.seed, k))
    run = simulate(g, rds_cfg, rng=rng)
    headers = _headers(cfg, (f"replicate {k}",))
    write_observed(run.observed, os.path.join(rep_out, "observed.txt"), headers)
    write_truth(run.truth, os.path.join(rep_out, "truth.txt"), headers)
    tm = cfg.timing_model()
    gap_tol = cfg.gap_tol if cfg.gap_tol > 0 else None
    if cfg.rounds > 1:
        alt = alternate(
            run.observed, cfg.penalty(), tm, rounds=cfg.rounds, bound=cfg.bound, gap_tol=gap_tol
        )
        res = alt.inference
        converged = alt.converged and res.converged
    else:
        res = infer(run.observed, cfg.penalty(), tm, bound=cfg.bound, gap_tol=gap_tol)
        converged = res.converged
    write_inference(res, os.path.join(rep_out, "inference.txt"), headers)
    truth_adj = run.truth.adjacency
    curve = roc(res, truth_adj, cfg.convention)
    base = forest_baseline(res.revealed, truth_adj, cfg.convention)
    write_roc_csv(curve, os.path.join(rep_out, "roc.csv"), headers)
    write_roc_svg(
        [("inference", curve), ("forest", base)],
        os.path.join(rep_out, "roc.svg"),
        header_comments=headers,
    )
    row = {
        "replicate": k,
        "auc": curve.auc(),
        "auc_forest": base.auc(),
        "min_corner": curve.min_corner_distance(),
        "corner_forest": corner_distance(float(base.tpr[1]), float(base.fpr[1])),
        "converged": int(converged),
        "completed": int(run.completed),
    }
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write("".join(f"{k2} {v!r}\n" for k2, v in row.items()))
    with open(marker, "w", encoding="utf-8") as fh:
        fh.write("done\n")
    return row


def _read_rep_summary(path: str, k: int) -> dict:
    row: dict = {"replicate": k}
    with open(path, "r", encoding="utf-8") as fh:
        for ln in fh:
            key, _, val = ln.strip().partition(" ")
            if key == "replicate":
                continue
            row[key] = int(val) if key in ("converged", "completed") else float(val)
    return row


def cmd_pipeline(cfg: RunConfig) -> int:
    os.makedirs(cfg.out, exist_ok=True)
    payloads = [(asdict(cfg), k) for k in range(cfg.replicates)]
    if cfg.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_run_replicate, payloads))
    else:
        rows = [_run_replicate(p) for p in payloads]
    rows.sort(key=lambda r: r["replicate"])
    cols = ("auc", "auc_forest", "min_corner", "corner_forest")
    lines = ["".join(f"# {h}\n" for h in _headers(cfg)).rstrip("\n")]
    lines.append("replicate,auc,auc_forest,min_corner,corner_forest,converged,completed")
    for r in rows:
        lines.append(
            f"{r['replicate']},{r['auc']:.17g},{r['auc_forest']:.17g},"
            f"{r['min_corner']:.17g},{r['corner_forest']:.17g},"
            f"{r['converged']},{r['completed']}"
        )
    for stat, q in (("q1", 25), ("median", 50), ("q3", 75)):
        vals = [float(np.percentile([r[c] for r in rows], q)) for c in cols]
        lines.append(f"{stat}," + ",".join(f"{v:.17g}" for v in vals) + ",,")
    with open(os.path.join(cfg.out, "summary.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    med = {c: float(np.median([r[c] for r in rows])) for c in cols}
    print(
        f"pipeline: {len(rows)} replicates  median auc {med['auc']:.4f}  "
        f"median forest auc {med['auc_forest']:.4f}  "
        f"median min corner {med['min_corner']:.4f}"
    )
    if any(not r["completed"] for r in rows):
        return 4
    if any(not r["converged"] for r in rows):
        return 3
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="rdsvi",
        description="Hidden-network reconstruction from chain-referral samples.",
    )
    parser.add_argument("--version", action="version", version=f"rdsvi {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "run one recruitment simulation and write observed + truth files"),
        ("infer", "reconstruct the hidden subgraph from an observed-data file"),
        ("eval", "score an inference result against a stored truth"),
        ("pipeline", "simulate, infer, and eval across replicates; aggregate a summary"),
    ):
        sp = sub.add_parser(name, help=help_text)
        _add_config_flags(sp)
        if name == "infer":
            sp.add_argument("--observed", required=True, help="observed-data file")
        if name == "eval":
            sp.add_argument("--inference", required=True, help="inference result file")
            sp.add_argument("--truth", required=True, help="truth file")
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "infer":
            return cmd_infer(cfg, args.observed)
        if args.command == "eval":
            return cmd_eval(cfg, args.inference, args.truth)
        return cmd_pipeline(cfg)
    except (ValueError, OSError, GraphFormatError, ObservedDataInvalid, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
