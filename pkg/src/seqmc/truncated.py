"""Truncated procedures: CSM and SIMCTEST forced to decide at a cap, and Besag-Clifford.

A truncated run that is still undecided at the cap rejects iff S_N / N < alpha.
Besag-Clifford stops at the h-th exceedance with estimate h / n, or at the
cap with estimate (S_N + 1) / (N + 1).
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .core import Decision, RunResult, TestConfig, decide, force_decision
from .csm import CsmBoundaryTable, csm_run
from .risk import resampling_risk, simulate_paths
from .simctest import SimctestBuilder, SpendingSequence, simctest_run

__all__ = [
    "TruncatedConfig",
    "truncated_run",
    "truncated_risk_curve",
    "besag_clifford_risk",
    "write_risk_curve",
    "read_risk_curve",
]

METHODS = ("csm", "simctest", "besag_clifford")


@dataclass(frozen=True)
class TruncatedConfig:
    method: str
    cap: int
    alpha: float = 0.05
    epsilon: float = 0.05
    spending: SpendingSequence | None = None  # simctest only; default k=1000
    h: int = 10  # besag_clifford only

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.cap < 1:
            raise ValueError("cap must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.method == "besag_clifford" and not 1 <= self.h <= self.cap:
            raise ValueError("Besag-Clifford needs 1 <= h <= cap")

    @property
    def test_config(self) -> TestConfig:
        return TestConfig(self.alpha, self.epsilon, self.cap)

    @property
    def seq(self) -> SpendingSequence:
        return self.spending or SpendingSequence.default(self.epsilon)

    def boundaries(self):
        if self.method == "csm":
            return CsmBoundaryTable(self.test_config, initial=self.cap).boundaries(self.cap)
        if self.method == "simctest":
            builder = SimctestBuilder(TestConfig(self.alpha, self.epsilon), self.seq)
            builder.extend(self.cap)
            return builder.boundaries(self.cap)
        raise ValueError("Besag-Clifford has no boundary table")


def _force(result: RunResult, alpha: float) -> RunResult:
    if result.decision is not Decision.NO_DECISION:
        return result
    return RunResult(result.steps, result.successes, result.estimate,
                     force_decision(result.estimate, alpha), "truncation")


def truncated_run(source, cfg: TruncatedConfig) -> RunResult:
    if cfg.method == "csm":
        return _force(csm_run(source, cfg.test_config), cfg.alpha)
    if cfg.method == "simctest":
        builder = SimctestBuilder(TestConfig(cfg.alpha, cfg.epsilon), cfg.seq)
        return _force(simctest_run(source, builder, max_steps=cfg.cap), cfg.alpha)
    s = 0
    for n in range(1, cfg.cap + 1):
        s += source.draw()
        if s == cfg.h:
            est = cfg.h / n
            return RunResult(n, s, est, decide(est, cfg.alpha), "upper")
    est = (s + 1) / (cfg.cap + 1)
    return RunResult(cfg.cap, s, est, decide(est, cfg.alpha), "truncation")


def _wrong(est, p, alpha):
    return est <= alpha if p > alpha else est > alpha


def besag_clifford_risk(p: float, alpha: float, h: int, cap: int) -> float:
    """Exact risk by DP over the exceedance count 0..h-1."""
    mass = np.zeros(h)
    mass[0] = 1.0
    q = 1.0 - p
    risk = 0.0
    for n in range(1, cap + 1):
        stop = mass[h - 1] * p
        if stop and _wrong(h / n, p, alpha):
            risk += stop
        mass[1:] = mass[1:] * q + mass[:-1] * p
        mass[0] *= q
    est = (np.arange(h) + 1) / (cap + 1)
    return risk + float(mass[_wrong(est, p, alpha)].sum())


def _besag_clifford_mc(p, alpha, h, cap, runs, rng) -> float:
    wrong = 0
    block = max(1, 4_000_000 // cap)
    for start in range(0, runs, block):
        k = min(block, runs - start)
        s = np.cumsum(rng.random((k, cap)) < p, axis=1)
        reached = s[:, -1] >= h
        first = np.argmax(s >= h, axis=1) + 1
        est = np.where(reached, h / first, (s[:, -1] + 1) / (cap + 1))
        wrong += int(_wrong(est, p, alpha).sum())
    return wrong / runs


def truncated_risk_curve(cfg: TruncatedConfig, p_grid, mode: str = "exact",
                         runs: int = 100_000, seed: int = 0):
    """Resampling risk at each p in ``p_grid`` as a list of ``(p, risk)``.

    ``mc`` mode uses one child seed per grid point, spawned from ``seed``.
    """
    if mode not in ("exact", "mc"):
        raise ValueError(f"mode must be 'exact' or 'mc', got {mode!r}")
    p_grid = [float(p) for p in p_grid]
    bounds = None if cfg.method == "besag_clifford" else cfg.boundaries()
    seeds = np.random.SeedSequence(seed).spawn(len(p_grid))
    out = []
    for p, ss in zip(p_grid, seeds):
        if mode == "exact":
            if bounds is None:
                r = besag_clifford_risk(p, cfg.alpha, cfg.h, cfg.cap)
            else:
                r = resampling_risk(bounds, p, cfg.alpha, cfg.cap, "force")
        else:
            rng = np.random.default_rng(ss)
            if bounds is None:
                r = _besag_clifford_mc(p, cfg.alpha, cfg.h, cfg.cap, runs, rng)
            else:
                steps, succ, side = simulate_paths(bounds, p, runs, rng, cfg.cap)
                est = succ / steps
                dec_low = np.where(side == 0, est < cfg.alpha, side == -1)
                r = float(np.mean(~dec_low if p <= cfg.alpha else dec_low))
        out.append((p, r))
    return out


def write_risk_curve(rows, destination) -> None:
    """Write ``p,risk`` CSV with shortest round-trip decimals."""
    lines = ["p,risk\n"] + [f"{float(p)!r},{float(r)!r}\n" for p, r in rows]
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", newline="") as fh:
            fh.writelines(lines)
    else:
        destination.writelines(lines)


def read_risk_curve(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="") as fh:
            return read_risk_curve(fh)
    reader = csv.reader(source)
    header = next(reader, None)
    if header != ["p", "risk"]:
        raise ValueError(f"expected header 'p,risk', got {header!r}")
    return [(float(p), float(r)) for p, r in reader]
