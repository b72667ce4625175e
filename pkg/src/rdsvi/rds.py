"""Event-driven simulation of respondent-driven sampling over a hidden graph.

The process: researchers enroll seed subjects on a fixed schedule; every
enrolled subject draws one waiting-time clock per graph neighbor at entry and
recruits that neighbor when the clock fires, provided a coupon is still held
and the neighbor is not yet enrolled.  Each recruitment costs one coupon.  The
study stops at ``sample_size`` enrollments.

Observables mirror what a field study records: entry times, reported degrees
in the whole graph, the recruitment forest, and a coupon matrix whose column j
says who held a coupon just before the j-th enrollment (the j-th subject's own
entry allotment included).
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .graph_core import AdjacencyMatrix, Graph, induced_subgraph, to_adjacency
from .timing import TimingModel, sample_waiting_time


def split_seed(master_seed: int, k: int) -> np.random.SeedSequence:
    """Independent per-replicate stream k derived from one master seed."""
    return np.random.SeedSequence(master_seed, spawn_key=(k,))


@dataclass
class RdsConfig:
    sample_size: int
    timing: TimingModel
    coupons: int | Sequence[int] = 3
    # (time, count) entries; the time-0 entry is mandatory
    seed_schedule: tuple[tuple[float, int], ...] = ((0.0, 1),)
    rng_seed: int = 0
    # picks a seed node from the sorted not-yet-enrolled candidates; uniform by default
    seed_picker: Callable[[np.random.Generator, np.ndarray], int] | None = None

    def __post_init__(self):
        if self.sample_size < 1:
            raise ValueError("sample_size must be >= 1")
        sched = tuple((float(t), int(c)) for (t, c) in self.seed_schedule)
        if not sched or sched[0][0] != 0.0:
            raise ValueError("seed schedule must start with a time-0 entry")
        times = [t for (t, _) in sched]
        if sorted(times) != times or len(set(times)) != len(times):
            raise ValueError("seed schedule times must be strictly increasing")
        if any(t < 0 for t in times) or any(c < 1 for (_, c) in sched):
            raise ValueError("seed schedule needs nonnegative times and positive counts")
        if sum(c for (_, c) in sched) > self.sample_size:
            raise ValueError("more scheduled seeds than sample_size")
        if isinstance(self.coupons, (int, np.integer)):
            if self.coupons < 0:
                raise ValueError("coupons must be nonnegative")
        else:
            allot = tuple(int(c) for c in self.coupons)
            if any(c < 0 for c in allot):
                raise ValueError("coupons must be nonnegative")
            if len(allot) < self.sample_size:
                raise ValueError("per-subject coupon vector shorter than sample_size")
            self.coupons = allot
        self.seed_schedule = sched

    def allotment(self, subject: int) -> int:
        if isinstance(self.coupons, (int, np.integer)):
            return int(self.coupons)
        return self.coupons[subject]


@dataclass(frozen=True)
class ObservedData:
    """What the study reveals: sizes, seeds, degrees, times, forest, coupons."""

    n: int
    seeds: tuple[int, ...]
    degrees: np.ndarray  # reported degree in the whole hidden graph
    times: np.ndarray
    recruiters: np.ndarray  # recruiter subject index per subject, -1 for seeds
    coupons: np.ndarray  # n x n 0/1, column j = held a coupon just before event j

    def __post_init__(self):
        object.__setattr__(self, "degrees", np.asarray(self.degrees, dtype=np.int64))
        object.__setattr__(self, "times", np.asarray(self.times, dtype=np.float64))
        object.__setattr__(self, "recruiters", np.asarray(self.recruiters, dtype=np.int64))
        object.__setattr__(self, "coupons", np.asarray(self.coupons, dtype=np.uint8))

    @property
    def recruitment_edges(self) -> tuple[tuple[int, int], ...]:
        return tuple((int(r), i) for i, r in enumerate(self.recruiters.tolist()) if r >= 0)

    def revealed_adjacency(self) -> AdjacencyMatrix:
        bits = np.zeros((self.n, self.n), dtype=bool)
        for (r, v) in self.recruitment_edges:
            bits[r, v] = bits[v, r] = True
        return AdjacencyMatrix(bits)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ObservedData)
            and self.n == other.n
            and self.seeds == other.seeds
            and np.array_equal(self.degrees, other.degrees)
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.recruiters, other.recruiters)
            and np.array_equal(self.coupons, other.coupons)
        )


@dataclass(frozen=True)
class RdsTruth:
    """Simulator-side ground truth withheld from inference."""

    adjacency: AdjacencyMatrix  # induced subgraph on the sample, entry order
    sample_nodes: tuple[int, ...]  # hidden-graph node ids in entry order
    event_log: tuple[tuple[int, int, float], ...]  # (recruiter subject or -1, subject, time)

    def pendant_counts(self, degrees: np.ndarray) -> np.ndarray:
        """Edges from each subject to nodes outside the sample."""
        return np.asarray(degrees, dtype=np.int64) - self.adjacency.degree()


@dataclass(frozen=True)
class RdsRun:
    observed: ObservedData
    truth: RdsTruth
    completed: bool
    requested_n: int


def simulate(g: Graph, cfg: RdsConfig, rng: np.random.Generator | None = None) -> RdsRun:
    """Run one study.  Bit-identical output for identical (g, cfg, rng state).

    Ties in event time are broken by (recruiter node, recruitee node), seed
    entries first; entry times then get a +1 ulp bump wherever needed to keep
    the recorded series strictly increasing.  Stopping short of
    ``cfg.sample_size`` (dried-up queue, exhausted graph) is reported via
    ``completed=False`` rather than raised.
    """
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.rng_seed))
    n_req = cfg.sample_size
    nbrs = g.neighbors()
    g_deg = g.degrees()

    subj_of: dict[int, int] = {}
    order: list[int] = []
    times: list[float] = []
    recruiters: list[int] = []
    coupons_rem = np.zeros(n_req, dtype=np.int64)
    cmat = np.zeros((n_req, n_req), dtype=np.uint8)
    events: list[tuple[float, int, int]] = []  # (time, recruiter node, recruitee node); seeds use recruiter -1

    for si, (t0, count) in enumerate(cfg.seed_schedule):
        for k in range(count):
            heapq.heappush(events, (t0, -1, si * n_req + k))

    def enroll(node: int, recruiter_subject: int, when: float) -> None:
        j = len(order)
        cmat[:j, j] = coupons_rem[:j] >= 1
        if recruiter_subject >= 0:
            coupons_rem[recruiter_subject] -= 1
        subj_of[node] = j
        order.append(node)
        recruiters.append(recruiter_subject)
        if times and when <= times[-1]:
            when = math.nextafter(times[-1], math.inf)
        times.append(when)
        allot = cfg.allotment(j)
        coupons_rem[j] = allot
        cmat[j, j] = 1 if allot >= 1 else 0
        for v in nbrs[node].tolist():
            w = sample_waiting_time(cfg.timing, rng)
            heapq.heappush(events, (when + w, node, v))

    while events and len(order) < n_req:
        when, a, b = heapq.heappop(events)
        if a == -1:
            # scheduled seed entry: uniform over nodes not yet enrolled, pluggable
            candidates = np.array([v for v in range(g.n) if v not in subj_of], dtype=np.int64)
            if candidates.size == 0:
                continue
            if cfg.seed_picker is not None:
                node = int(cfg.seed_picker(rng, candidates))
                if node not in candidates:
                    raise ValueError("seed_picker returned an enrolled or unknown node")
            else:
                node = int(candidates[rng.integers(candidates.size)])
            enroll(node, -1, when)
        else:
            if b in subj_of:
                continue
            ra = subj_of[a]
            if coupons_rem[ra] < 1:
                continue
            enroll(b, ra, when)

    n_got = len(order)
    observed = ObservedData(
        n=n_got,
        seeds=tuple(i for i, r in enumerate(recruiters) if r < 0),
        degrees=g_deg[np.array(order, dtype=np.int64)],
        times=np.array(times, dtype=np.float64),
        recruiters=np.array(recruiters, dtype=np.int64),
        coupons=cmat[:n_got, :n_got].copy(),
    )
    truth = RdsTruth(
        adjacency=to_adjacency(induced_subgraph(g, order)),
        sample_nodes=tuple(order),
        event_log=tuple(
            (int(recruiters[i]), i, float(times[i])) for i in range(n_got)
        ),
    )
    return RdsRun(observed=observed, truth=truth, completed=(n_got == n_req), requested_n=n_req)


def validate(obs: ObservedData) -> list[str]:
    """Consistency checks on observed data; empty list means valid."""
    bad: list[str] = []
    n = obs.n
    if obs.degrees.shape != (n,) or obs.times.shape != (n,) or obs.recruiters.shape != (n,):
        return [f"array lengths inconsistent with n={n}"]
    if obs.coupons.shape != (n, n):
        return [f"coupon matrix shape {obs.coupons.shape} != ({n}, {n})"]
    if n == 0:
        return ["empty study"]
    if not np.all(np.diff(obs.times) > 0):
        bad.append("entry times are not strictly increasing")
    if not set(obs.seeds) == {i for i, r in enumerate(obs.recruiters.tolist()) if r < 0}:
        bad.append("seed set does not match the recruiterless subjects")
    if 0 not in obs.seeds:
        bad.append("first subject must be a seed")
    for i, r in enumerate(obs.recruiters.tolist()):
        if r >= i:
            bad.append(f"subject {i} recruited by a later or same subject {r}")
    cm = obs.coupons
    if not np.isin(cm, (0, 1)).all():
        bad.append("coupon matrix entries must be 0/1")
    if np.any(np.tril(cm, k=-1) != 0):
        bad.append("coupon matrix has support before subject entry")
    for i in range(n):
        row = cm[i, i:]
        if np.any(np.diff(row.astype(np.int8)) > 0):
            bad.append(f"subject {i} regains a coupon; coupons are never resupplied")
            break
    for i, r in enumerate(obs.recruiters.tolist()):
        if 0 <= r and cm[r, i] != 1:
            bad.append(f"recruiter {r} of subject {i} held no coupon at that event")
    gr_deg = np.zeros(n, dtype=np.int64)
    for (r, v) in obs.recruitment_edges:
        gr_deg[r] += 1
        gr_deg[v] += 1
    if np.any(obs.degrees < gr_deg):
        bad.append("reported degrees fall below recruitment-forest degrees")
    if np.any(obs.degrees < 0):
        bad.append("reported degrees must be nonnegative")
    return bad


# --- plain-text serialization -------------------------------------------------
#
# Single file, keyword sections, '#' comments.  Floats are written with repr,
# which round-trips every IEEE double exactly, so read(write(x)) == x bitwise.

def _fmt_floats(xs) -> str:
    return " ".join(repr(float(x)) for x in xs)


def write_observed(obs: ObservedData, path: str, header_comments: Sequence[str] = ()) -> None:
    lines = ["# rdsvi observed v1"]
    lines += [f"# {c}" for c in header_comments]
    lines.append(f"n {obs.n}")
    lines.append("seeds " + " ".join(str(s) for s in obs.seeds))
    lines.append("degrees " + " ".join(str(int(d)) for d in obs.degrees))
    lines.append("times " + _fmt_floats(obs.times))
    lines.append("recruitment")
    for (r, v) in obs.recruitment_edges:
        lines.append(f"{r} {v}")
    lines.append("coupons")
    for i in range(obs.n):
        lines.append("".join("1" if x else "0" for x in obs.coupons[i]))
    lines.append("end")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_observed(path: str) -> ObservedData:
    with open(path, "r", encoding="utf-8") as fh:
        raw = [ln.strip() for ln in fh]
    lines = [ln for ln in raw if ln and not ln.startswith("#")]
    it = iter(lines)

    def expect(keyword: str) -> list[str]:
        ln = next(it)
        if not ln.startswith(keyword):
            raise ValueError(f"expected section {keyword!r}, got {ln!r}")
        return ln.split()[1:]

    n = int(expect("n")[0])
    seeds = tuple(int(s) for s in expect("seeds"))
    degrees = np.array([int(x) for x in expect("degrees")], dtype=np.int64)
    times = np.array([float(x) for x in expect("times")], dtype=np.float64)
    expect("recruitment")
    recruiters = np.full(n, -1, dtype=np.int64)
    ln = next(it)
    while ln != "coupons":
        r_s, v_s = ln.split()
        r, v = int(r_s), int(v_s)
        if recruiters[v] != -1:
            raise ValueError(f"subject {v} has two recruiters")
        recruiters[v] = r
        ln = next(it)
    rows = []
    ln = next(it)
    while ln != "end":
        rows.append([1 if ch == "1" else 0 for ch in ln])
        ln = next(it)
    coupons = np.array(rows, dtype=np.uint8)
    return ObservedData(
        n=n, seeds=seeds, degrees=degrees, times=times, recruiters=recruiters, coupons=coupons
    )


def write_truth(truth: RdsTruth, path: str, header_comments: Sequence[str] = ()) -> None:
    lines = ["# rdsvi truth v1"]
    lines += [f"# {c}" for c in header_comments]
    lines.append(f"n {truth.adjacency.n}")
    lines.append("sample_nodes " + " ".join(str(v) for v in truth.sample_nodes))
    lines.append("edges")
    for (i, j) in sorted(truth.adjacency.edge_set()):
        lines.append(f"{i} {j}")
    lines.append("events")
    for (r, v, t) in truth.event_log:
        lines.append(f"{r} {v} {repr(float(t))}")
    lines.append("end")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_truth(path: str) -> RdsTruth:
    with open(path, "r", encoding="utf-8") as fh:
        raw = [ln.strip() for ln in fh]
    lines = [ln for ln in raw if ln and not ln.startswith("#")]
    it = iter(lines)
    ln = next(it)
    if not ln.startswith("n "):
        raise ValueError("truth file must start with the n section")
    n = int(ln.split()[1])
    ln = next(it)
    if not ln.startswith("sample_nodes"):
        raise ValueError("missing sample_nodes section")
    sample_nodes = tuple(int(x) for x in ln.split()[1:])
    if next(it) != "edges":
        raise ValueError("missing edges section")
    bits = np.zeros((n, n), dtype=bool)
    ln = next(it)
    while ln != "events":
        i_s, j_s = ln.split()
        i, j = int(i_s), int(j_s)
        bits[i, j] = bits[j, i] = True
        ln = next(it)
    log = []
    ln = next(it)
    while ln != "end":
        r_s, v_s, t_s = ln.split()
        log.append((int(r_s), int(v_s), float(t_s)))
        ln = next(it)
    return RdsTruth(adjacency=AdjacencyMatrix(bits), sample_nodes=sample_nodes, event_log=tuple(log))
