"""Posterior over the unobserved sample-induced subgraph.

The recruitment-time likelihood factors over events.  At the i-th enrollment,
every coupon-holding subject u races one clock per not-yet-enrolled neighbor,
each clock aged ``t_i - t_u`` and known to have survived past the previous
event.  The density contribution is the hazard mass of the firing event times
the conditional survival of every losing clock.  Neighbor counts split into
edges inside the sample (the unknown adjacency) plus edges to outsiders (the
unknown pendant counts), which makes the log-likelihood a sum of logs of
nonnegative linear functions of those unknowns plus a linear censoring term.

Two evaluation paths are kept deliberately separate: an event-by-event scalar
form used as a test oracle, and the vectorized masked-matrix form used
everywhere else.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .graph_core import AdjacencyMatrix
from .rds import ObservedData
from .submodular import OracleCursor, SetFunctionOracle
from .timing import (
    Exponential,
    SupportExhaustedError,
    TimingModel,
    Weibull,
    conditional_hazard,
    log_conditional_survival,
)

LOG_ZERO = -np.inf


class DataInconsistencyError(ValueError):
    """Observed times and entry order contradict each other."""


class InsufficientDataError(ValueError):
    """The data carry no information about the waiting-time parameters."""


@dataclass(frozen=True)
class EventMatrices:
    """Per-(subject, event) hazard and log-survival tables.

    Support is strictly upper triangular: subject u enters before event i.
    ``masked_*`` variants are zeroed wherever no coupon was held, so they are
    the only tables the likelihood touches.
    """

    times: np.ndarray
    nonseed: np.ndarray  # float 0/1 per event, 1 unless the event is a seed entry
    hazard: np.ndarray
    log_surv: np.ndarray
    masked_hazard: np.ndarray
    masked_log_surv: np.ndarray
    prev_gaps: np.ndarray  # clock age at the previous event, the censoring origin

    @property
    def n(self) -> int:
        return self.times.shape[0]


def build_matrices(obs: ObservedData, tm: TimingModel) -> EventMatrices:
    n = obs.n
    t = obs.times
    if np.any(np.diff(t) <= 0):
        raise DataInconsistencyError("entry times must be strictly increasing")
    uu, ii = np.triu_indices(n, k=1)
    gaps = t[ii] - t[uu]
    prev = t[ii - 1] - t[uu]
    if np.any(prev < 0):
        raise DataInconsistencyError("negative clock age at a previous event")
    H = np.zeros((n, n), dtype=np.float64)
    S = np.zeros((n, n), dtype=np.float64)
    if n > 1:
        H[uu, ii] = conditional_hazard(tm, prev, gaps)
        S[uu, ii] = log_conditional_survival(tm, prev, gaps)
    P = np.zeros((n, n), dtype=np.float64)
    P[uu, ii] = prev
    c = obs.coupons.astype(np.float64)
    nonseed = np.ones(n, dtype=np.float64)
    nonseed[list(obs.seeds)] = 0.0
    return EventMatrices(
        times=t,
        nonseed=nonseed,
        hazard=H,
        log_surv=S,
        masked_hazard=c * H,
        masked_log_surv=c * S,
        prev_gaps=P,
    )


def hazard_mass(mat: EventMatrices, A: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Per-event total hazard: sum over recruiters of (open edges) x hazard.

    Open edges of u just before event i = edges to subjects enrolled at i or
    later, plus pendant edges; the count is linear in (A, u).
    """
    B = mat.masked_hazard
    return B.T @ np.asarray(u, dtype=np.float64) + np.tril(np.asarray(A, dtype=np.float64) @ B).sum(axis=0)


def log_likelihood_matrix(mat: EventMatrices, A, u) -> float:
    """Vectorized log-likelihood of the entry-time series given (A, u)."""
    Ab = A.bits if isinstance(A, AdjacencyMatrix) else np.asarray(A)
    Ab = Ab.astype(np.float64)
    uf = np.asarray(u, dtype=np.float64)
    b = hazard_mass(mat, Ab, uf)
    D = mat.masked_log_surv
    delta = D.T @ uf + np.tril(Ab @ D).sum(axis=0)
    ns = mat.nonseed > 0
    if np.any(b[ns] <= 0.0):
        return LOG_ZERO
    return float(np.log(b[ns]).sum() + delta.sum())


def log_likelihood_direct(obs: ObservedData, tm: TimingModel, A, u) -> float:
    """Event-by-event scalar evaluation straight from the process definition.

    Kept loop-shaped and built on scalar timing calls so it cannot share a
    bug with the matrix path; used as the reference in tests.
    """
    Ab = A.bits if isinstance(A, AdjacencyMatrix) else np.asarray(A)
    Ab = np.asarray(Ab).astype(np.int64)
    uv = np.asarray(u, dtype=np.int64)
    n = obs.n
    t = obs.times
    seeds = set(obs.seeds)
    # open-edge counts toward not-yet-enrolled subjects: row r, columns >= i
    suffix = np.flip(np.cumsum(np.flip(Ab, axis=1), axis=1), axis=1)
    total = 0.0
    for i in range(n):
        hazard_sum = 0.0
        for r in range(i):  # only subjects already enrolled can recruit
            if obs.coupons[r, i] != 1:
                continue
            open_edges = int(suffix[r, i]) + int(uv[r])
            if open_edges == 0:
                continue
            age_prev = t[i - 1] - t[r]
            age_now = t[i] - t[r]
            hazard_sum += open_edges * conditional_hazard(tm, age_prev, age_now)
            total += open_edges * log_conditional_survival(tm, age_prev, age_now)
        if i not in seeds:
            if hazard_sum <= 0.0:
                return LOG_ZERO
            total += math.log(hazard_sum)
    return total


@dataclass(frozen=True)
class PenaltyConfig:
    """Soft penalty on pendant-plus-sample degree overshooting reported degree."""

    omega: float = 1.0
    p: float = 2.0

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("omega must be nonnegative")
        if not (self.p >= 1.0):
            raise ValueError("norm order p must be >= 1 (math.inf allowed)")

    def norm(self, x: np.ndarray) -> float:
        if x.size == 0:
            return 0.0
        if math.isinf(self.p):
            return float(np.max(x))
        if self.p == 1.0:
            return float(np.sum(x))
        if self.p == 2.0:
            return float(np.sqrt(np.sum(x * x)))
        return float(np.sum(x**self.p) ** (1.0 / self.p))


def degree_excess(A, u, degrees) -> np.ndarray:
    Ab = A.bits if isinstance(A, AdjacencyMatrix) else np.asarray(A)
    lin = np.asarray(u, dtype=np.float64) + Ab.astype(np.float64).sum(axis=1) - np.asarray(degrees, dtype=np.float64)
    return np.maximum(lin, 0.0)


def log_prior(A, u, degrees, pc: PenaltyConfig) -> float:
    """Unnormalized: -omega * ||max(u + A1 - d, 0)||_p."""
    return -pc.omega * pc.norm(degree_excess(A, u, degrees))


@dataclass(frozen=True)
class SubgraphCodec:
    """Bits <-> (adjacency containing the revealed forest, pendant counts).

    Layout: one bit per unrevealed pair (i < j, lexicographic), then per
    subject a little-endian block of ``count_bits`` bits encoding its pendant
    count.  ``count_bits`` is the width needed to represent ``u_max`` itself,
    so every count in [0, u_max] round-trips (the width can also express some
    values above ``u_max``; the degree penalty is what discourages those).
    """

    revealed: AdjacencyMatrix
    u_max: int

    @property
    def n(self) -> int:
        return self.revealed.n

    @property
    def free_edges(self) -> tuple[tuple[int, int], ...]:
        return self._free_edges  # type: ignore[attr-defined]

    def __post_init__(self):
        if self.u_max < 0:
            raise ValueError("u_max must be nonnegative")
        n = self.revealed.n
        rb = self.revealed.bits
        fe = tuple(
            (i, j) for i in range(n) for j in range(i + 1, n) if not rb[i, j]
        )
        object.__setattr__(self, "_free_edges", fe)

    @classmethod
    def from_observed(cls, obs: ObservedData) -> "SubgraphCodec":
        u_max = int(obs.degrees.max()) if obs.n else 0
        return cls(revealed=obs.revealed_adjacency(), u_max=u_max)

    @property
    def count_bits(self) -> int:
        return int(self.u_max).bit_length()

    @property
    def n_edge_bits(self) -> int:
        return len(self.free_edges)

    @property
    def dim(self) -> int:
        return self.n_edge_bits + self.n * self.count_bits

    def count_index(self, subject: int, bit: int) -> int:
        return self.n_edge_bits + subject * self.count_bits + bit

    def encode(self, A: AdjacencyMatrix, u) -> np.ndarray:
        if A.n != self.n:
            raise ValueError("adjacency size mismatch")
        if not A.contains(self.revealed):
            raise ValueError("adjacency must contain every revealed edge")
        uv = np.asarray(u, dtype=np.int64)
        if uv.shape != (self.n,):
            raise ValueError("pendant-count vector has wrong length")
        if np.any(uv < 0) or np.any(uv >= 2 ** max(self.count_bits, 1)):
            raise ValueError("pendant count outside representable range")
        bits = np.zeros(self.dim, dtype=bool)
        for k, (i, j) in enumerate(self.free_edges):
            bits[k] = A.bits[i, j]
        nb = self.count_bits
        for s in range(self.n):
            for kk in range(nb):
                bits[self.n_edge_bits + s * nb + kk] = bool((int(uv[s]) >> kk) & 1)
        return bits

    def decode(self, bits) -> tuple[AdjacencyMatrix, np.ndarray]:
        """Accepts a boolean vector of length dim or an iterable of set bit indices."""
        if isinstance(bits, np.ndarray) and bits.dtype == bool:
            bv = bits
        elif isinstance(bits, (set, frozenset, list, tuple)):
            bv = np.zeros(self.dim, dtype=bool)
            for i in bits:
                bv[int(i)] = True
        else:
            bv = np.asarray(bits, dtype=bool)
        if bv.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} bits, got {bv.shape}")
        ab = self.revealed.bits.copy()
        for k, (i, j) in enumerate(self.free_edges):
            if bv[k]:
                ab[i, j] = ab[j, i] = True
        nb = self.count_bits
        u = np.zeros(self.n, dtype=np.int64)
        for s in range(self.n):
            val = 0
            for kk in range(nb):
                if bv[self.n_edge_bits + s * nb + kk]:
                    val |= 1 << kk
            u[s] = val
        return AdjacencyMatrix(ab), u


class PosteriorObjective(SetFunctionOracle):
    """Normalized log-posterior as a set function over codec bits.

    F(x) = [loglik + logprior](decode(x)) - [loglik + logprior](decode(0)),
    so F(empty) = 0.  Every per-event hazard mass, the censoring sum, and the
    degree-excess linear part are affine in the bits with nonnegative hazard
    coefficients, which is what makes F submodular: logs of nondecreasing
    affine terms are concave, censoring is modular, and the penalty is the
    negative of a convex nondecreasing function of an affine term.
    """

    def __init__(
        self,
        codec: SubgraphCodec,
        matrices: EventMatrices,
        penalty: PenaltyConfig,
        degrees: np.ndarray,
    ):
        super().__init__(codec.dim)
        self.codec = codec
        self.matrices = matrices
        self.penalty = penalty
        self.degrees = np.asarray(degrees, dtype=np.int64)
        n = codec.n
        B = matrices.masked_hazard
        D = matrices.masked_log_surv
        self._nonseed = matrices.nonseed > 0

        rb = codec.revealed.bits.astype(np.float64)
        self._base_b = hazard_mass(matrices, rb, np.zeros(n))
        if np.any(self._base_b[self._nonseed] <= 0.0):
            raise DataInconsistencyError(
                "a non-seed event has zero hazard mass under the revealed forest alone"
            )
        self._base_delta = float(np.tril(rb @ D).sum())
        # linear part of the degree excess at the empty bit vector
        self._base_lin = rb.sum(axis=1) - self.degrees.astype(np.float64)

        N = codec.dim
        inc_b = np.zeros((N, n), dtype=np.float64)
        inc_d = np.zeros(N, dtype=np.float64)
        inc_lin = np.zeros((N, n), dtype=np.float64)
        span_lo = np.zeros(N, dtype=np.int64)
        span_hi = np.zeros(N, dtype=np.int64)
        for k, (p, q) in enumerate(codec.free_edges):
            # edge (p, q) keeps p's clock racing through events p+1..q
            inc_b[k, p + 1 : q + 1] = B[p, p + 1 : q + 1]
            inc_d[k] = D[p, p + 1 : q + 1].sum()
            inc_lin[k, p] += 1.0
            inc_lin[k, q] += 1.0
            span_lo[k], span_hi[k] = p + 1, q + 1
        nb = codec.count_bits
        for s in range(n):
            for kk in range(nb):
                idx = codec.count_index(s, kk)
                w = float(1 << kk)
                inc_b[idx] = w * B[s]
                inc_d[idx] = w * D[s].sum()
                inc_lin[idx, s] = w
                span_lo[idx], span_hi[idx] = s + 1, n
        self._inc_b = inc_b
        self._inc_d = inc_d
        self._inc_lin = inc_lin
        self._span = (span_lo, span_hi)

        self._base_value = (
            float(np.log(self._base_b[self._nonseed]).sum())
            + self._base_delta
            - penalty.omega * penalty.norm(np.maximum(self._base_lin, 0.0))
        )

    # -- oracle interface ------------------------------------------------

    def _raw_value(self, members: np.ndarray) -> float:
        mf = members.astype(np.float64)
        b = self._base_b + mf @ self._inc_b
        if np.any(b[self._nonseed] <= 0.0):
            return LOG_ZERO
        delta = self._base_delta + float(mf @ self._inc_d)
        lin = self._base_lin + mf @ self._inc_lin
        pen = self.penalty.omega * self.penalty.norm(np.maximum(lin, 0.0))
        return float(np.log(b[self._nonseed]).sum() + delta - pen)

    def value(self, members) -> float:
        self.calls += 1
        return self._raw_value(self._as_members(members)) - self._base_value

    def cursor(self, members=()) -> "PosteriorCursor":
        return PosteriorCursor(self, self._as_members(members))

    def chain_values(self, order: np.ndarray) -> np.ndarray:
        """Values of all prefixes of ``order`` (empty prefix first), vectorized."""
        order = np.asarray(order, dtype=np.int64)
        N = order.shape[0]
        self.calls += N
        bcum = self._base_b + np.cumsum(self._inc_b[order], axis=0)
        beta = np.log(bcum[:, self._nonseed]).sum(axis=1)
        delta = self._base_delta + np.cumsum(self._inc_d[order])
        lin = self._base_lin + np.cumsum(self._inc_lin[order], axis=0)
        e = np.maximum(lin, 0.0)
        pc = self.penalty
        if pc.omega == 0.0:
            pen = np.zeros(N)
        elif math.isinf(pc.p):
            pen = pc.omega * e.max(axis=1)
        elif pc.p == 1.0:
            pen = pc.omega * e.sum(axis=1)
        elif pc.p == 2.0:
            pen = pc.omega * np.sqrt((e * e).sum(axis=1))
        else:
            pen = pc.omega * (e**pc.p).sum(axis=1) ** (1.0 / pc.p)
        vals = beta + delta - pen - self._base_value
        return np.concatenate(([0.0], vals))


class PosteriorCursor(OracleCursor):
    """Incremental evaluator: one bit toggle costs O(n) work."""

    def __init__(self, oracle: PosteriorObjective, members: np.ndarray):
        self.oracle = oracle
        self._members = members.copy()
        self._load()

    def _load(self) -> None:
        f = self.oracle
        mf = self._members.astype(np.float64)
        self._b = f._base_b + mf @ f._inc_b
        self._delta = f._base_delta + float(mf @ f._inc_d)
        self._lin = f._base_lin + mf @ f._inc_lin
        self._beta = float(np.log(self._b[f._nonseed]).sum())
        self._pen = f.penalty.omega * f.penalty.norm(np.maximum(self._lin, 0.0))

    @property
    def members(self) -> np.ndarray:
        return self._members.copy()

    @property
    def value(self) -> float:
        return self._beta + self._delta - self._pen - self.oracle._base_value

    def reset(self, members=()) -> None:
        self._members = self.oracle._as_members(members)
        self._load()

    def _deltas(self, i: int):
        f = self.oracle
        sign = -1.0 if self._members[i] else 1.0
        lo, hi = f._span[0][i], f._span[1][i]
        inc = f._inc_b[i, lo:hi]
        ns = f._nonseed[lo:hi]
        a = inc[ns]
        bb = self._b[lo:hi][ns]
        d_beta = float(np.log1p(sign * a / bb).sum()) if a.size else 0.0
        d_delta = sign * f._inc_d[i]
        pc = f.penalty
        if pc.omega == 0.0:
            pen_new = 0.0
        else:
            lin_new = self._lin + sign * f._inc_lin[i]
            pen_new = pc.omega * pc.norm(np.maximum(lin_new, 0.0))
        return sign, lo, hi, d_beta, d_delta, pen_new

    def peek_toggle(self, i: int) -> float:
        self.oracle.calls += 1
        _, _, _, d_beta, d_delta, pen_new = self._deltas(i)
        return d_beta + d_delta - (pen_new - self._pen)

    def apply_toggle(self, i: int) -> float:
        self.oracle.calls += 1
        f = self.oracle
        sign, lo, hi, d_beta, d_delta, pen_new = self._deltas(i)
        gain = d_beta + d_delta - (pen_new - self._pen)
        self._b[lo:hi] += sign * f._inc_b[i, lo:hi]
        self._lin += sign * f._inc_lin[i]
        self._beta += d_beta
        self._delta += d_delta
        self._pen = pen_new
        self._members[i] = not self._members[i]
        return gain


@dataclass(frozen=True)
class ThetaStepResult:
    model: TimingModel
    loglik: float
    converged: bool


def _profile_loglik(obs: ObservedData, A, u):
    Ab = A.bits if isinstance(A, AdjacencyMatrix) else np.asarray(A)
    Ab = Ab.astype(np.float64)
    uf = np.asarray(u, dtype=np.float64)

    def ll(tm: TimingModel) -> float:
        try:
            return log_likelihood_matrix(build_matrices(obs, tm), Ab, uf)
        except SupportExhaustedError:
            # parameters under which the observed gaps have zero probability:
            # a legal but worthless point for the search
            return LOG_ZERO

    return ll


def _bounded_logsearch(fun, lo: float, hi: float):
    # the profiled objective is +inf at extreme parameters, and the bounded
    # Brent search then forms inf - inf internally before falling back to a
    # golden-section step; that invalid-value warning is expected here
    with np.errstate(invalid="ignore"):
        return optimize.minimize_scalar(
            fun, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}
        )


def theta_step(
    obs: ObservedData,
    A,
    u,
    start: TimingModel,
    log_bracket: tuple[float, float] = (math.log(1e-6), math.log(1e6)),
    tol: float = 1e-8,
) -> ThetaStepResult:
    """Maximize the time-series log-likelihood over waiting-time parameters.

    Bracketed scalar search on log-parameters: one pass for the exponential
    rate, coordinate sweeps for the Weibull pair.  The prior does not involve
    the parameters, so only the likelihood is profiled.
    """
    iu, ii = np.triu_indices(obs.n, k=1)
    if obs.n < 2 or not np.any(obs.coupons[iu, ii]):
        raise InsufficientDataError("no recruitment exposure to fit waiting times")
    ll = _profile_loglik(obs, A, u)
    lo, hi = log_bracket

    if isinstance(start, Exponential):
        res = _bounded_logsearch(lambda x: -ll(Exponential(math.exp(x))), lo, hi)
        best = Exponential(math.exp(res.x))
        best_ll = ll(best)
        probe = max(
            ll(Exponential(best.rate * (1 + 1e-6))), ll(Exponential(best.rate * (1 - 1e-6)))
        )
        return ThetaStepResult(best, best_ll, converged=(probe - best_ll) < tol)

    if isinstance(start, Weibull):
        shape, scale = start.shape, start.scale
        prev = ll(Weibull(shape, scale))
        converged = False
        for _ in range(60):
            res = _bounded_logsearch(lambda x: -ll(Weibull(math.exp(x), scale)), lo, hi)
            shape = math.exp(res.x)
            res = _bounded_logsearch(lambda x: -ll(Weibull(shape, math.exp(x))), lo, hi)
            scale = math.exp(res.x)
            cur = ll(Weibull(shape, scale))
            if abs(cur - prev) < tol:
                converged = True
                break
            prev = cur
        best = Weibull(shape, scale)
        return ThetaStepResult(best, ll(best), converged=converged)

    raise TypeError(f"unsupported timing model {type(start).__name__}")
