"""Exact analysis of integer stopping boundaries by dynamic programming.

Any :class:`~seqmc.core.BoundaryPair` (CSM, SIMCTEST, truncated variants)
goes through the same forward recursion on the law of S_n conditional on
not having stopped.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import BoundaryExhausted, BoundaryPair

__all__ = [
    "StateDistribution",
    "RiskTrace",
    "EffortResult",
    "RateSeries",
    "initial_state",
    "evolve",
    "hitting_probabilities",
    "resampling_risk",
    "expected_stopping_time",
    "spend_rate_series",
    "simulate_paths",
]


@dataclass(frozen=True)
class StateDistribution:
    step: int
    offset: int
    mass: np.ndarray  # mass[i] = P(S_step = offset + i, not stopped)
    stopped_upper: float = 0.0
    stopped_lower: float = 0.0

    @property
    def total(self) -> float:
        return float(self.mass.sum()) + self.stopped_upper + self.stopped_lower


def initial_state() -> StateDistribution:
    return StateDistribution(0, 0, np.array([1.0]))


def evolve(dist: StateDistribution, p: float, lower_next: int, upper_next: int) -> StateDistribution:
    """One exact Bernoulli(p) step followed by absorption at the step-(n+1) boundaries."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    lo = np.array([lower_next], dtype=np.int64)
    up = np.array([upper_next], dtype=np.int64)
    mass, offset, uh, lh, _ = kernels.propagate(lo, up, p, 0, 1, dist.mass, dist.offset)
    return StateDistribution(
        dist.step + 1, int(offset), mass,
        dist.stopped_upper + float(uh[0]), dist.stopped_lower + float(lh[0]),
    )


@dataclass(frozen=True)
class RiskTrace:
    p: float
    upper: np.ndarray  # cumulative probability of having hit the upper boundary by step n
    lower: np.ndarray
    alive: np.ndarray  # P(not stopped by step n)
    final: StateDistribution

    @property
    def n_max(self) -> int:
        return len(self.upper)


def _check_p(p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")


def hitting_probabilities(bounds: BoundaryPair, p: float, n_max: int | None = None) -> RiskTrace:
    _check_p(p)
    n_max = bounds.n_max if n_max is None else n_max
    if n_max > bounds.n_max:
        raise BoundaryExhausted(n_max, bounds.n_max)
    mass, offset, uh, lh, alive = kernels.propagate(
        bounds.lower, bounds.upper, p, 0, n_max, np.array([1.0]), 0
    )
    up = np.cumsum(uh)
    low = np.cumsum(lh)
    final = StateDistribution(
        n_max, int(offset), mass,
        float(up[-1]) if n_max else 0.0, float(low[-1]) if n_max else 0.0,
    )
    return RiskTrace(p, up, low, alive, final)


def resampling_risk(
    bounds: BoundaryPair,
    p: float,
    alpha: float | None = None,
    n_max: int | None = None,
    truncation_rule: str = "none",
) -> float:
    """Probability that the procedure decides on the wrong side of alpha within n_max steps.

    ``none`` counts only boundary hits on the wrong side.  ``force`` also
    decides every path still running at n_max, rejecting iff S/n_max < alpha
    (see :func:`~seqmc.core.force_decision`).
    """
    if truncation_rule not in ("none", "force"):
        raise ValueError(f"unknown truncation rule {truncation_rule!r}")
    alpha = bounds.alpha if alpha is None else alpha
    trace = hitting_probabilities(bounds, p, n_max)
    n = trace.n_max
    wrong_low = p > alpha  # wrong decision is "p <= alpha"
    risk = float(trace.lower[-1] if wrong_low else trace.upper[-1])
    if truncation_rule == "force":
        f = trace.final
        est = (f.offset + np.arange(len(f.mass))) / n
        wrong = est < alpha if wrong_low else est >= alpha
        risk += float(f.mass[wrong].sum())
    return risk


@dataclass(frozen=True)
class EffortResult:
    expectation: float  # E[min(tau, steps + 1)]
    residual_mass: float  # P(tau > steps)
    steps: int
    converged: bool


def expected_stopping_time(bounds, p: float, tail_tol: float = 1e-10, cap: int | None = None) -> EffortResult:
    """E[min(tau, N)] accumulated as a sum of survival probabilities.

    ``bounds`` is a ``BoundaryPair`` (hard cap = its length) or a growing
    table such as ``CsmBoundaryTable`` / ``SimctestBuilder`` (hard cap =
    ``cap``, default 10**7).  The DP runs until the in-flight mass drops
    below ``tail_tol``; hitting the cap first yields ``converged=False`` and
    a warning.
    """
    _check_p(p)
    if tail_tol <= 0:
        raise ValueError("tail_tol must be positive")
    fixed = isinstance(bounds, BoundaryPair)
    if fixed:
        cap = bounds.n_max if cap is None else min(cap, bounds.n_max)
    elif cap is None:
        cap = 10**7
    total = 1.0  # P(tau > 0)
    mass, offset = np.array([1.0]), 0
    n = 0
    residual = 1.0
    chunk = 1024
    while n < cap:
        n1 = min(cap, n + chunk)
        if fixed:
            lower, upper = bounds.lower, bounds.upper
        else:
            lower, upper = bounds.ensure(n1)
        mass, offset, _, _, alive = kernels.propagate(lower, upper, p, n, n1, mass, offset)
        below = np.nonzero(alive < tail_tol)[0]
        if len(below):
            k = int(below[0])
            total += float(alive[: k + 1].sum())
            return EffortResult(total, float(alive[k]), n + k + 1, True)
        total += float(alive.sum())
        residual = float(alive[-1])
        n = n1
        chunk *= 2
    warnings.warn(
        f"expected_stopping_time: cap {cap} reached with residual in-flight mass {residual:.3g}",
        RuntimeWarning,
        stacklevel=2,
    )
    return EffortResult(total, residual, n, False)


@dataclass(frozen=True)
class RateSeries:
    side: str
    exponent: float
    n: np.ndarray
    value: np.ndarray  # block-averaged per-step spend times n**exponent
    slope: float  # least-squares slope of log(per-step spend) against log n


def spend_rate_series(
    bounds: BoundaryPair,
    exponent: float,
    stride: int = 100,
    burn_in: int = 500,
    side: str = "upper",
    p: float | None = None,
    n_max: int | None = None,
) -> RateSeries:
    """Per-step resampling risk spent, sampled every ``stride`` steps.

    The per-step spend at n = m * stride is the hitting mass absorbed in
    (n - stride, n] divided by stride.  The slope is fitted on points with
    n >= burn_in.
    """
    if side not in ("upper", "lower", "total"):
        raise ValueError(f"unknown side {side!r}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    p = bounds.alpha if p is None else p
    trace = hitting_probabilities(bounds, p, n_max)
    if side == "upper":
        cum = trace.upper
    elif side == "lower":
        cum = trace.lower
    else:
        cum = trace.upper + trace.lower
    cum = np.concatenate([[0.0], cum])
    ns = np.arange(stride, trace.n_max + 1, stride)
    delta = (cum[ns] - cum[ns - stride]) / stride
    keep = (ns >= burn_in) & (delta > 0)
    if keep.sum() >= 2:
        slope = float(np.polyfit(np.log(ns[keep]), np.log(delta[keep]), 1)[0])
    else:
        slope = float("nan")
    return RateSeries(side, exponent, ns, delta * ns.astype(float) ** exponent, slope)


def simulate_paths(bounds: BoundaryPair, p: float, runs: int, seed, n_max: int | None = None):
    """Monte Carlo boundary crossings of Bernoulli(p) paths.

    Returns ``(steps, successes, side)`` arrays; ``side`` is +1 for an upper
    hit, -1 for a lower hit and 0 for paths still running at n_max (whose
    steps equal n_max).  Uses numpy's PCG64 seeded with ``seed``.
    """
    _check_p(p)
    n_max = bounds.n_max if n_max is None else n_max
    if n_max > bounds.n_max:
        raise BoundaryExhausted(n_max, bounds.n_max)
    rng = np.random.default_rng(seed)
    steps = np.full(runs, n_max, dtype=np.int64)
    succ = np.zeros(runs, dtype=np.int64)
    side = np.zeros(runs, dtype=np.int8)
    active = np.arange(runs)
    s = np.zeros(runs, dtype=np.int64)
    n0 = 0
    while n0 < n_max and active.size:
        c = min(n_max - n0, max(16, 4_000_000 // active.size))
        x = rng.random((active.size, c)) < p
        path = s[active][:, None] + np.cumsum(x, axis=1)
        up = path >= bounds.upper[n0:n0 + c]
        hit = up | (path <= bounds.lower[n0:n0 + c])
        any_hit = hit.any(axis=1)
        first = hit.argmax(axis=1)
        rows = active[any_hit]
        f = first[any_hit]
        steps[rows] = n0 + f + 1
        succ[rows] = path[any_hit, f]
        side[rows] = np.where(up[any_hit, f], 1, -1)
        s[active] = path[:, -1]
        active = active[~any_hit]
        n0 += c
    succ[active] = s[active]
    return steps, succ, side
