"""Shared result and configuration types."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "Decision",
    "TestConfig",
    "RunResult",
    "BoundaryPair",
    "SourceExhausted",
    "BoundaryExhausted",
    "decide",
    "force_decision",
]


class Decision(str, enum.Enum):
    """Outcome of a sequential test of ``p <= alpha`` against ``p > alpha``."""

    REJECT_NULL = "reject_null"  # p judged <= alpha
    ACCEPT_NULL = "accept_null"  # p judged > alpha
    NO_DECISION = "no_decision"

    def __str__(self) -> str:
        return self.value


def decide(estimate: float, alpha: float) -> Decision:
    """Forced comparison of an estimate with the threshold; equality rejects."""
    return Decision.REJECT_NULL if estimate <= alpha else Decision.ACCEPT_NULL


def force_decision(fraction: float, alpha: float) -> Decision:
    """Decision for a path still running at its cap: rejects iff S_N / N < alpha.

    The tie S_N / N == alpha goes to the p > alpha side, so at p == alpha the
    wrong-decision probability of any truncated rule is at least one half.
    """
    return Decision.REJECT_NULL if fraction < alpha else Decision.ACCEPT_NULL


@dataclass(frozen=True)
class TestConfig:
    alpha: float = 0.05
    epsilon: float = 1e-3
    max_steps: Optional[int] = None

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError(f"max_steps must be positive, got {self.max_steps}")


@dataclass(frozen=True)
class RunResult:
    steps: int
    successes: int
    estimate: float
    decision: Decision
    stopped_by: str  # "upper", "lower" or "truncation"

    def __post_init__(self):
        if not 0 <= self.successes <= self.steps:
            raise ValueError("successes must lie in [0, steps]")


@dataclass(eq=False)
class BoundaryPair:
    """Integer stopping boundaries ``lower[n-1]``, ``upper[n-1]`` for n = 1..n_max.

    A path stops at step n once ``S_n >= upper`` or ``S_n <= lower``.
    """

    lower: np.ndarray
    upper: np.ndarray
    alpha: float
    epsilon: float
    method: str
    spending: str = "none"
    version: int = 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lower = np.ascontiguousarray(self.lower, dtype=np.int64)
        self.upper = np.ascontiguousarray(self.upper, dtype=np.int64)
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("lower and upper must be 1-d arrays of equal length")

    @property
    def n_max(self) -> int:
        return len(self.lower)

    def at(self, n: int) -> tuple[int, int]:
        return int(self.lower[n - 1]), int(self.upper[n - 1])

    def truncate(self, n_max: int) -> "BoundaryPair":
        if n_max > self.n_max:
            raise BoundaryExhausted(n_max, self.n_max)
        return BoundaryPair(
            self.lower[:n_max].copy(),
            self.upper[:n_max].copy(),
            self.alpha,
            self.epsilon,
            self.method,
            self.spending,
            self.version,
            dict(self.meta),
        )

    def __eq__(self, other):
        if not isinstance(other, BoundaryPair):
            return NotImplemented
        return (
            np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
            and self.alpha == other.alpha
            and self.epsilon == other.epsilon
            and self.method == other.method
            and self.spending == other.spending
            and self.version == other.version
        )


class SourceExhausted(RuntimeError):
    """A sample source ran out of indicators before the procedure stopped."""

    def __init__(self, draws: int):
        super().__init__(f"sample source exhausted after {draws} draws without a decision")
        self.draws = draws


class BoundaryExhausted(IndexError):
    """A precomputed boundary table is shorter than the run requires."""

    def __init__(self, required: int, available: int):
        super().__init__(
            f"boundary table covers {available} steps; extend it to at least {required} steps"
        )
        self.required = required
        self.available = available
