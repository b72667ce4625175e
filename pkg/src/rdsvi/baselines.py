"""Comparator reconstructions: stochastic local search over the posterior.

The annealer walks single-bit toggles of the same encoded state space the
variational path scores, so the two approaches are directly comparable at
equal objective budgets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evaluation import forest_baseline  # noqa: F401  (comparator surface lives here too)
from .graph_core import AdjacencyMatrix
from .likelihood import PenaltyConfig
from .rds import ObservedData
from .timing import TimingModel


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling schedule; unset fields are sized from the problem.

    ``t0=None`` calibrates the start temperature to the interquartile range
    of 100 random-toggle objective changes; ``steps_per_temp=None`` uses 50
    proposals per bit per temperature stage.
    """

    t0: float | None = None
    cooling: float = 0.9
    steps_per_temp: int | None = None
    stages: int = 30
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.cooling < 1.0):
            raise ValueError("cooling must lie in (0, 1)")
        if self.stages < 1:
            raise ValueError("stages must be >= 1")
        if self.t0 is not None and self.t0 <= 0:
            raise ValueError("t0 must be positive when given")


@dataclass(frozen=True)
class AnnealResult:
    adjacency: AdjacencyMatrix
    pendants: np.ndarray
    best_value: float
    best_members: frozenset[int]
    steps: int
    objective_calls: int
    trace: np.ndarray  # best value at the end of each stage


def calibrate_t0(objective, rng: np.random.Generator, samples: int = 100) -> float:
    """Interquartile range of |objective change| along a random toggle walk."""
    cur = objective.cursor()
    n = objective.n
    deltas = np.empty(samples)
    for k in range(samples):
        i = int(rng.integers(n))
        deltas[k] = abs(cur.peek_toggle(i))
        cur.apply_toggle(i)
    q75, q25 = np.percentile(deltas, [75, 25])
    t0 = float(q75 - q25)
    return t0 if t0 > 0 else max(float(np.median(deltas)), 1.0)


def simanneal(
    obs: ObservedData,
    penalty: PenaltyConfig,
    tm: TimingModel,
    schedule: AnnealSchedule = AnnealSchedule(),
) -> AnnealResult:
    """Metropolis search for the posterior mode by single-bit toggles.

    Proposals flipping one encoded bit are accepted with probability
    min(1, exp(gain / T)); T cools geometrically per stage.  At T -> 0 this
    reduces to hill climbing.  The best state ever seen is returned, so the
    reconstruction always contains the revealed forest.
    """
    from .inference import build_objective  # deferred: inference imports nothing from here

    _, objective = build_objective(obs, penalty, tm)
    rng = np.random.default_rng(np.random.SeedSequence(schedule.seed))
    n = objective.n
    t = schedule.t0 if schedule.t0 is not None else calibrate_t0(objective, rng)
    per_stage = schedule.steps_per_temp if schedule.steps_per_temp is not None else 50 * n

    cur = objective.cursor()
    state = np.zeros(n, dtype=bool)
    best_state = state.copy()
    best_value = cur.value
    steps = 0
    trace = np.empty(schedule.stages)
    for stage in range(schedule.stages):
        proposals = rng.integers(n, size=per_stage)
        uniforms = rng.random(per_stage)
        for i, uni in zip(proposals.tolist(), uniforms.tolist()):
            gain = cur.peek_toggle(i)
            if gain >= 0.0 or (gain / t > -745.0 and uni < math.exp(gain / t)):
                cur.apply_toggle(i)
                state[i] = not state[i]
                if cur.value > best_value:
                    best_value = cur.value
                    best_state[:] = state
            steps += 1
        trace[stage] = best_value
        t *= schedule.cooling
    members = frozenset(np.nonzero(best_state)[0].tolist())
    adjacency, pendants = objective.codec.decode(members)
    return AnnealResult(
        adjacency=adjacency,
        pendants=pendants,
        best_value=best_value,
        best_members=members,
        steps=steps,
        objective_calls=objective.calls,
        trace=trace,
    )
