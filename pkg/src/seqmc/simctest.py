"""SIMCTEST: recursively computed boundaries driven by a spending sequence.

At each step the distribution of S_n under p = alpha, conditional on not
having stopped, is pushed forward one Bernoulli step.  U_n is the smallest
j whose upper tail plus the upper mass already absorbed fits in the budget
eps_n; L_n is the largest j whose lower tail plus the absorbed lower mass
fits.  Boundaries and absorbed masses come out of the same pass.
"""
from __future__ import annotations

import io
import os
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .core import BoundaryPair, RunResult, TestConfig
from .csm import run_with_table

__all__ = [
    "SpendingSequence",
    "spending_at",
    "SimctestBuilder",
    "simctest_boundaries",
    "simctest_run",
    "save_boundaries",
    "load_boundaries",
    "BoundaryFileError",
    "BoundaryParseError",
    "BoundaryInvariantError",
    "BoundaryVersionError",
    "FORMAT_VERSION",
]

FORMAT_VERSION = 1


@dataclass(frozen=True)
class SpendingSequence:
    """How much of the total risk ``epsilon`` may be spent by step n.

    ``default``:   eps * n / (n + k)
    ``truncated``: 0 for n <= lo, eps * n / (n + k) for lo < n < hi, eps for n >= hi
    ``power``:     eps * n**gamma / (n**gamma + k)
    """

    kind: str
    epsilon: float
    k: float = 1000.0
    lo: int = 0
    hi: int = 0
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("default", "truncated", "power"):
            raise ValueError(f"unknown spending kind {self.kind!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.kind == "truncated" and not 0 <= self.lo < self.hi:
            raise ValueError("truncated spending needs 0 <= L < U")
        if self.kind == "power" and self.gamma <= 0:
            raise ValueError("gamma must be positive")

    @classmethod
    def default(cls, epsilon: float, k: float = 1000.0) -> "SpendingSequence":
        return cls("default", epsilon, k=k)

    @classmethod
    def truncated(cls, epsilon: float, lo: int, hi: int, k: float = 1000.0) -> "SpendingSequence":
        return cls("truncated", epsilon, k=k, lo=lo, hi=hi)

    @classmethod
    def power(cls, epsilon: float, gamma: float, k: float) -> "SpendingSequence":
        return cls("power", epsilon, k=k, gamma=gamma)

    def values(self, n_start: int, n_end: int) -> np.ndarray:
        """eps_n for n = n_start..n_end."""
        n = np.arange(n_start, n_end + 1, dtype=np.float64)
        eps = self.epsilon
        if self.kind == "default":
            return eps * n / (n + self.k)
        if self.kind == "power":
            ng = n**self.gamma
            return eps * ng / (ng + self.k)
        out = eps * n / (n + self.k)
        out[n <= self.lo] = 0.0
        out[n >= self.hi] = eps
        return out

    def at(self, n: int) -> float:
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        return float(self.values(n, n)[0])

    def descriptor(self) -> str:
        if self.kind == "default":
            return f"default:k={_fmt(self.k)}"
        if self.kind == "truncated":
            return f"truncated:L={self.lo},U={self.hi},k={_fmt(self.k)}"
        return f"power:gamma={_fmt(self.gamma)},k={_fmt(self.k)}"

    @classmethod
    def parse(cls, text: str, epsilon: float) -> "SpendingSequence":
        """Inverse of :meth:`descriptor`; bare ``default`` means k = 1000."""
        kind, _, rest = text.strip().partition(":")
        params = {}
        if rest:
            for item in rest.split(","):
                key, sep, val = item.partition("=")
                if not sep:
                    raise ValueError(f"malformed spending parameter {item!r} in {text!r}")
                params[key.strip()] = val.strip()
        try:
            if kind == "default":
                return cls.default(epsilon, float(params.get("k", 1000)))
            if kind == "truncated":
                return cls.truncated(
                    epsilon, int(params["L"]), int(params["U"]), float(params.get("k", 1000))
                )
            if kind == "power":
                return cls.power(epsilon, float(params.get("gamma", 0.5)), float(params.get("k", 3)))
        except KeyError as exc:
            raise ValueError(f"spending {text!r} is missing parameter {exc.args[0]}") from None
        raise ValueError(f"unknown spending kind {kind!r}")


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def spending_at(seq: SpendingSequence, n: int) -> float:
    return seq.at(n)


class SimctestBuilder:
    """Incremental SIMCTEST boundary computation.

    Holds the conditional distribution of S_n under p = alpha together with
    the cumulative masses absorbed at each boundary, so the horizon can be
    extended at any time without recomputing earlier steps.
    """

    def __init__(self, cfg: TestConfig, seq: SpendingSequence):
        if seq.epsilon != cfg.epsilon:
            raise ValueError(
                f"spending sequence epsilon {seq.epsilon} does not match config epsilon {cfg.epsilon}"
            )
        self.cfg = cfg
        self.seq = seq
        self.lower = np.empty(0, dtype=np.int64)
        self.upper = np.empty(0, dtype=np.int64)
        self.upper_mass = np.empty(0)  # cumulative, per step
        self.lower_mass = np.empty(0)
        self._mass = np.array([1.0])
        self._offset = 0
        self._cum_up = 0.0
        self._cum_low = 0.0

    @property
    def n_max(self) -> int:
        return len(self.lower)

    @property
    def inflight_mass(self) -> float:
        return float(self._mass.sum())

    def extend(self, n_max: int) -> None:
        have = self.n_max
        if n_max <= have:
            return
        eps = self.seq.values(have + 1, n_max)
        lo, up, ut, lt, mass, offset, cu, cl = kernels.simctest_extend(
            self.cfg.alpha, eps, have, self._mass, self._offset, self._cum_up, self._cum_low
        )
        self.lower = np.concatenate([self.lower, lo])
        self.upper = np.concatenate([self.upper, up])
        self.upper_mass = np.concatenate([self.upper_mass, ut])
        self.lower_mass = np.concatenate([self.lower_mass, lt])
        self._mass, self._offset, self._cum_up, self._cum_low = mass, offset, cu, cl
        if self.seq.kind != "truncated":
            start = max(have - 1, 0)
            if np.any(np.diff(self.lower[start:]) < 0) or np.any(np.diff(self.upper[start:]) < 0):
                raise AssertionError("SIMCTEST boundaries are not non-decreasing")

    def ensure(self, n: int):
        """Grow geometrically so that at least n steps are covered."""
        if n > self.n_max:
            self.extend(max(n, 2 * self.n_max))
        return self.lower, self.upper

    def boundaries(self, n_max: Optional[int] = None) -> BoundaryPair:
        n_max = self.n_max if n_max is None else n_max
        self.extend(n_max)
        return BoundaryPair(
            self.lower[:n_max].copy(), self.upper[:n_max].copy(),
            self.cfg.alpha, self.cfg.epsilon, "simctest", self.seq.descriptor(),
        )


def simctest_boundaries(n_max: int, cfg: TestConfig, seq: SpendingSequence) -> BoundaryPair:
    """Boundaries U_n, L_n for n = 1..n_max.

    Use :class:`SimctestBuilder` directly to also read the absorbed masses.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    builder = SimctestBuilder(cfg, seq)
    builder.extend(n_max)
    return builder.boundaries()


class _FixedTable:
    def __init__(self, bounds: BoundaryPair):
        self.bounds = bounds

    def ensure(self, n: int):
        return self.bounds.lower, self.bounds.upper


def simctest_run(source, bounds, max_steps: Optional[int] = None) -> RunResult:
    """Run SIMCTEST against a precomputed ``BoundaryPair`` or a growing ``SimctestBuilder``.

    Stops at the first step with S_n >= U_n (p judged above alpha) or
    S_n <= L_n (p judged at or below alpha); the estimate is S_sigma / sigma.
    A precomputed table shorter than the run needs raises
    :class:`~seqmc.core.BoundaryExhausted` naming the required length.
    """
    if isinstance(bounds, BoundaryPair):
        return run_with_table(source, _FixedTable(bounds), bounds.alpha, max_steps)
    return run_with_table(source, bounds, bounds.cfg.alpha, max_steps)


# -- boundary cache files ---------------------------------------------------

class BoundaryFileError(ValueError):
    pass


class BoundaryParseError(BoundaryFileError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class BoundaryInvariantError(BoundaryFileError):
    pass


class BoundaryVersionError(BoundaryFileError):
    pass


_HEADER_KEYS = ("version", "method", "alpha", "epsilon", "spending")
_HEADER_RE = re.compile(r"#([a-z]+)=([^\n]*)\n\Z")
_ROW_RE = re.compile(r"(0|[1-9][0-9]*),(-1|0|[1-9][0-9]*),(-1|0|[1-9][0-9]*)\n\Z")


def _dump(bounds: BoundaryPair) -> str:
    out = [
        f"#version={bounds.version}\n",
        f"#method={bounds.method}\n",
        f"#alpha={bounds.alpha!r}\n",
        f"#epsilon={bounds.epsilon!r}\n",
        f"#spending={bounds.spending}\n",
    ]
    out.extend(f"{n},{lo},{up}\n" for n, (lo, up) in enumerate(zip(bounds.lower.tolist(), bounds.upper.tolist()), 1))
    return "".join(out)


def save_boundaries(bounds: BoundaryPair, destination) -> None:
    """Write ``bounds`` in the line-oriented cache format to a path or text stream."""
    text = _dump(bounds)
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", newline="\n") as fh:
            fh.write(text)
    else:
        destination.write(text)


def validate_boundaries(bounds: BoundaryPair) -> None:
    lo, up = bounds.lower, bounds.upper
    bad = np.nonzero(lo >= up)[0]
    if len(bad):
        n = int(bad[0]) + 1
        raise BoundaryInvariantError(f"step {n}: lower {lo[n - 1]} is not below upper {up[n - 1]}")
    if bounds.method == "simctest" and bounds.n_max and (lo[0] != -1 or up[0] != 2):
        raise BoundaryInvariantError(f"step 1 must have L=-1, U=2, got L={lo[0]}, U={up[0]}")
    if not bounds.spending.startswith("truncated"):
        for name, arr in (("lower", lo), ("upper", up)):
            dec = np.nonzero(np.diff(arr) < 0)[0]
            if len(dec):
                raise BoundaryInvariantError(f"{name} boundary decreases at step {int(dec[0]) + 2}")


def load_boundaries(source) -> BoundaryPair:
    """Parse a cache file (path or text stream) and validate its invariants."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", newline="") as fh:
            lines = fh.readlines()
    else:
        lines = io.StringIO(source.read(), newline="").readlines()

    header = {}
    for i, key in enumerate(_HEADER_KEYS):
        lineno = i + 1
        if i >= len(lines):
            raise BoundaryParseError(lineno, f"missing header #{key}=")
        m = _HEADER_RE.match(lines[i])
        if not m or m.group(1) != key:
            raise BoundaryParseError(lineno, f"expected header #{key}=<value>, got {lines[i]!r}")
        header[key] = m.group(2)
        if key == "version":
            if not re.fullmatch(r"[1-9][0-9]*", header[key]):
                raise BoundaryParseError(lineno, f"malformed version {header[key]!r}")
            if int(header[key]) != FORMAT_VERSION:
                raise BoundaryVersionError(
                    f"unsupported boundary file version {header[key]} (expected {FORMAT_VERSION})"
                )
    if header["method"] not in ("simctest", "csm"):
        raise BoundaryParseError(2, f"unknown method {header['method']!r}")
    try:
        alpha = float(header["alpha"])
        epsilon = float(header["epsilon"])
    except ValueError as exc:
        raise BoundaryParseError(3, str(exc)) from None

    rows = lines[len(_HEADER_KEYS):]
    lower = np.empty(len(rows), dtype=np.int64)
    upper = np.empty(len(rows), dtype=np.int64)
    for j, line in enumerate(rows):
        lineno = len(_HEADER_KEYS) + j + 1
        m = _ROW_RE.match(line)
        if not m:
            raise BoundaryParseError(lineno, f"malformed row {line!r}")
        n = int(m.group(1))
        if n != j + 1:
            raise BoundaryParseError(lineno, f"expected step {j + 1}, got {n}")
        lower[j] = int(m.group(2))
        upper[j] = int(m.group(3))
    if not len(rows):
        raise BoundaryParseError(len(lines) + 1, "no boundary rows")
    bounds = BoundaryPair(lower, upper, alpha, epsilon, header["method"], header["spending"], FORMAT_VERSION)
    validate_boundaries(bounds)
    return bounds
