"""Waiting-time families for the recruitment process.

Waiting times are i.i.d. nonnegative draws with survival S(t).  Inference
needs two conditional quantities for a clock started at age ``s`` and observed
at age ``t >= s``: the conditional survival S(t)/S(s) and the conditional
hazard, which algebraically reduces to the unconditional hazard at ``t``
because the conditioning factor cancels between density and survival.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SupportExhaustedError(FloatingPointError):
    """Survival underflowed to exactly zero; the hazard ratio is no longer representable."""


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be positive and finite, got {self.rate}")

    @property
    def params(self) -> tuple[float, ...]:
        return (self.rate,)

    def log_survival(self, t):
        if isinstance(t, (int, float)):
            if t < 0:
                raise ValueError("ages must be nonnegative")
            return -self.rate * float(t)
        t = _check_age(t)
        return -self.rate * t

    def hazard(self, t):
        if isinstance(t, (int, float)):
            if t < 0:
                raise ValueError("ages must be nonnegative")
            return float(self.rate)
        t = _check_age(t)
        return np.broadcast_to(np.float64(self.rate), np.shape(t)).copy() if np.ndim(t) else float(self.rate)

    def quantile(self, u):
        # inverse cdf; -log1p(-u) is exact near u = 0
        return -np.log1p(-np.asarray(u, dtype=np.float64)) / self.rate


@dataclass(frozen=True)
class Weibull:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise ValueError(f"shape must be positive and finite, got {self.shape}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"scale must be positive and finite, got {self.scale}")

    @property
    def params(self) -> tuple[float, ...]:
        return (self.shape, self.scale)

    def log_survival(self, t):
        if isinstance(t, (int, float)):
            if t < 0:
                raise ValueError("ages must be nonnegative")
            try:
                return -((float(t) / self.scale) ** self.shape)
            except OverflowError:
                return -math.inf
        t = _check_age(t)
        return -((np.asarray(t, dtype=np.float64) / self.scale) ** self.shape)

    def hazard(self, t):
        if isinstance(t, (int, float)):
            if t < 0:
                raise ValueError("ages must be nonnegative")
            t = float(t)
            if t == 0.0:
                # support boundary: 0 for shape > 1, the rate for shape = 1,
                # divergent for shape < 1
                if self.shape > 1.0:
                    return 0.0
                if self.shape == 1.0:
                    return self.shape / self.scale
                return math.inf
            try:
                return (self.shape / self.scale) * (t / self.scale) ** (self.shape - 1.0)
            except OverflowError:
                return math.inf
        t = _check_age(t)
        t = np.asarray(t, dtype=np.float64)
        with np.errstate(divide="ignore"):
            # t = 0 is on the support boundary: hazard is 0 for shape > 1,
            # rate for shape = 1, and diverges for shape < 1
            h = (self.shape / self.scale) * (t / self.scale) ** (self.shape - 1.0)
        return h if h.ndim else float(h)

    def quantile(self, u):
        return self.scale * (-np.log1p(-np.asarray(u, dtype=np.float64))) ** (1.0 / self.shape)


TimingModel = Exponential | Weibull


def _check_age(t):
    arr = np.asarray(t)
    if np.any(arr < 0):
        raise ValueError("ages must be nonnegative")
    return t


def survival(tm: TimingModel, t):
    return np.exp(tm.log_survival(t))


def log_conditional_survival(tm: TimingModel, s, t):
    """log of Pr[W > t | W > s] for 0 <= s <= t."""
    if isinstance(s, (int, float)) and isinstance(t, (int, float)):
        if s < 0:
            raise ValueError("conditioning age must be nonnegative")
        if t < s:
            raise ValueError("observation age must be >= conditioning age")
        return float(tm.log_survival(float(t)) - tm.log_survival(float(s)))
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if np.any(s < 0):
        raise ValueError("conditioning age must be nonnegative")
    if np.any(t < s):
        raise ValueError("observation age must be >= conditioning age")
    out = tm.log_survival(t) - tm.log_survival(s)
    return out if out.ndim else float(out)


def conditional_survival(tm: TimingModel, s, t):
    return np.exp(log_conditional_survival(tm, s, t))


def conditional_hazard(tm: TimingModel, s, t):
    """Hazard of a clock of age ``t`` that was still running at age ``s``.

    The conditioning cancels, so this equals the unconditional hazard at
    ``t``; the preconditions on ``s`` are still enforced so that inconsistent
    event data fails loudly rather than silently.
    """
    if isinstance(s, (int, float)) and isinstance(t, (int, float)):
        if s < 0:
            raise ValueError("conditioning age must be nonnegative")
        if t < s:
            raise ValueError("observation age must be >= conditioning age")
        if math.exp(tm.log_survival(float(t))) == 0.0:
            raise SupportExhaustedError("survival underflowed to zero at the requested age")
        return tm.hazard(float(t))
    s = np.asarray(s, dtype=np.float64)
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(s < 0):
        raise ValueError("conditioning age must be nonnegative")
    if np.any(t_arr < s):
        raise ValueError("observation age must be >= conditioning age")
    if np.any(np.exp(tm.log_survival(t)) == 0.0):
        raise SupportExhaustedError("survival underflowed to zero at the requested age")
    return tm.hazard(t)


def sample_waiting_time(tm: TimingModel, rng: np.random.Generator, size=None):
    """Inverse-cdf sampling; one uniform consumed per draw."""
    u = rng.random() if size is None else rng.random(size)
    q = tm.quantile(u)
    return float(q) if size is None else q
