"""The confidence sequence method (CSM).

Sampling stops at the first n with ``(n + 1) * b(n, alpha, S_n) <= epsilon``.
Equivalently the path stops once it leaves the open band between the
implied boundaries ``l_n < S_n < u_n``; runs use the boundary form because
it is cheaper to check, and the two forms are tested to agree.
"""
from __future__ import annotations

import math

import numpy as np

from . import kernels
from .binom import BinomialParams, log_binom_pmf
from .core import BoundaryExhausted, BoundaryPair, Decision, RunResult, TestConfig

__all__ = ["csm_should_stop", "csm_boundaries", "CsmBoundaryTable", "csm_run", "run_with_table"]


def csm_should_stop(n: int, s: int, cfg: TestConfig) -> bool:
    """True iff (n + 1) b(n, alpha, s) <= epsilon, compared in log space.

    >>> csm_should_stop(1, 1, TestConfig(0.05, 0.001))
    False
    >>> csm_should_stop(300, 0, TestConfig(0.05, 0.001))
    True
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    lp = log_binom_pmf(BinomialParams(n, cfg.alpha, s))
    return math.log(n + 1) + lp <= math.log(cfg.epsilon)


def _check_monotone(lower, upper, what):
    if np.any(np.diff(lower) < 0) or np.any(np.diff(upper) < 0):
        raise AssertionError(f"{what} boundaries are not non-decreasing")


class CsmBoundaryTable:
    """Implied CSM boundaries, grown on demand by doubling the horizon."""

    def __init__(self, cfg: TestConfig, initial: int = 1024):
        self.cfg = cfg
        self._log_eps = math.log(cfg.epsilon)
        self.lower = np.empty(0, dtype=np.int64)
        self.upper = np.empty(0, dtype=np.int64)
        self.ensure(initial)

    @property
    def n_max(self) -> int:
        return len(self.lower)

    def ensure(self, n: int):
        have = len(self.lower)
        if n <= have:
            return self.lower, self.upper
        target = max(n, 2 * have)
        l_prev, u_prev = (-1, 2) if have == 0 else (int(self.lower[-1]), int(self.upper[-1]))
        lo, up = kernels.csm_bounds(have + 1, target, self.cfg.alpha, self._log_eps, l_prev, u_prev)
        lower = np.concatenate([self.lower, lo])
        upper = np.concatenate([self.upper, up])
        _check_monotone(lower[max(have - 1, 0):], upper[max(have - 1, 0):], "CSM")
        self.lower, self.upper = lower, upper
        return self.lower, self.upper

    def boundaries(self, n_max: int | None = None) -> BoundaryPair:
        n_max = self.n_max if n_max is None else n_max
        self.ensure(n_max)
        return BoundaryPair(
            self.lower[:n_max].copy(), self.upper[:n_max].copy(),
            self.cfg.alpha, self.cfg.epsilon, "csm", "none",
        )


def csm_boundaries(n_max: int, cfg: TestConfig) -> BoundaryPair:
    """Implied boundaries l_n, u_n for n = 1..n_max.

    ``u_n = max{k : (n+1) b(n, alpha, k) > eps} + 1`` and
    ``l_n = min{k : (n+1) b(n, alpha, k) > eps} - 1``.  Each step's search
    starts from the previous step's boundary, so the total cost is linear in
    n_max plus the boundary drift.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    return CsmBoundaryTable(cfg, initial=n_max).boundaries(n_max)


_TABLES: dict = {}


def _shared_table(cfg: TestConfig) -> CsmBoundaryTable:
    key = (cfg.alpha, cfg.epsilon)
    table = _TABLES.get(key)
    if table is None:
        table = _TABLES[key] = CsmBoundaryTable(cfg)
    return table


def run_with_table(source, table, alpha: float, max_steps: int | None) -> RunResult:
    """Draw from ``source`` until the path hits a boundary of ``table`` or max_steps.

    ``table`` is anything with ``ensure(n) -> (lower, upper)``.  Tables that
    cannot grow may return fewer than n steps; the run only fails, with
    :class:`BoundaryExhausted`, when it actually needs a missing step.
    """
    n = 0
    s = 0
    lower: list = []
    upper: list = []
    draw = source.draw
    while True:
        if max_steps is not None and n >= max_steps:
            return RunResult(n, s, s / n, Decision.NO_DECISION, "truncation")
        if n >= len(lower):
            want = max(1024, 2 * len(lower))
            if max_steps is not None:
                want = min(want, max_steps)
            lower_arr, upper_arr = table.ensure(want)
            lower = lower_arr.tolist()
            upper = upper_arr.tolist()
            if n >= len(lower):
                raise BoundaryExhausted(n + 1, len(lower))
        s += draw()
        n += 1
        if s >= upper[n - 1]:
            return RunResult(n, s, s / n, Decision.ACCEPT_NULL, "upper")
        if s <= lower[n - 1]:
            return RunResult(n, s, s / n, Decision.REJECT_NULL, "lower")


def csm_run(source, cfg: TestConfig, table: CsmBoundaryTable | None = None) -> RunResult:
    """Run CSM on a stream of exceedance indicators.

    Stops as soon as the confidence interval excludes alpha; the estimate is
    S_tau / tau.  If ``cfg.max_steps`` is reached first, the result carries
    ``Decision.NO_DECISION`` and the empirical fraction S_N / N.
    """
    if table is None:
        table = _shared_table(cfg)
    elif (table.cfg.alpha, table.cfg.epsilon) != (cfg.alpha, cfg.epsilon):
        raise ValueError("boundary table was built for a different alpha/epsilon")
    return run_with_table(source, table, cfg.alpha, cfg.max_steps)
