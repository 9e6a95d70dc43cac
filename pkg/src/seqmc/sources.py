"""Streams of exceedance indicators X_i = 1(T_i >= t).

All random sources draw from numpy's PCG64 generator seeded with the
source's integer seed, generating indicators in fixed blocks of
``BLOCK`` so the stream for a given seed never depends on how it is consumed.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .core import SourceExhausted

__all__ = [
    "SampleSource",
    "FixedPSource",
    "SequenceSource",
    "PenguinData",
    "PENGUINS",
    "PenguinBootstrapSource",
    "fixed_p_source",
    "penguin_bootstrap_source",
    "file_source",
    "welch_t",
    "welch_t_batch",
    "load_two_sample_csv",
]

BLOCK = 1024


class SampleSource:
    """Base class: subclasses implement ``_generate(k)`` returning k indicators."""

    seed: int | None = None

    def __init__(self):
        self.draws = 0
        self._buf: list = []
        self._pos = 0

    def _generate(self, k: int) -> np.ndarray:
        raise NotImplementedError

    def draw(self) -> int:
        if self._pos >= len(self._buf):
            self._buf = self._generate(BLOCK).astype(np.int64).tolist()
            self._pos = 0
            if not self._buf:
                raise SourceExhausted(self.draws)
        x = self._buf[self._pos]
        self._pos += 1
        self.draws += 1
        return x

    def take(self, k: int) -> np.ndarray:
        return np.fromiter((self.draw() for _ in range(k)), dtype=np.int64, count=k)

    def __iter__(self):
        return self

    def __next__(self) -> int:
        try:
            return self.draw()
        except SourceExhausted:
            raise StopIteration from None


class FixedPSource(SampleSource):
    """I.i.d. Bernoulli(p) indicators."""

    def __init__(self, p: float, seed: int):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        super().__init__()
        self.p = p
        self.seed = seed
        self._rng = np.random.Generator(np.random.PCG64(seed))

    def _generate(self, k):
        return self._rng.random(k) < self.p


def fixed_p_source(p: float, seed: int) -> FixedPSource:
    return FixedPSource(p, seed)


class SequenceSource(SampleSource):
    """A finite, pre-recorded stream; raises SourceExhausted at its end."""

    def __init__(self, values):
        super().__init__()
        arr = np.asarray(list(values), dtype=np.int64)
        if np.any((arr != 0) & (arr != 1)):
            raise ValueError("indicator values must be 0 or 1")
        self._values = arr
        self._next = 0

    def _generate(self, k):
        out = self._values[self._next:self._next + k]
        self._next += len(out)
        return out


def file_source(path) -> SequenceSource:
    """Read one ``0`` or ``1`` per line."""
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            tok = line.strip()
            if not tok:
                continue
            if tok not in ("0", "1"):
                raise ValueError(f"{path}:{lineno}: expected 0 or 1, got {tok!r}")
            values.append(int(tok))
    return SequenceSource(values)


def welch_t(x, y) -> tuple[float, float]:
    """Welch's t statistic and Welch-Satterthwaite degrees of freedom.

    >>> welch_t([1, 2, 3], [1, 2, 3])
    (0.0, 4.0)
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n1, n2 = len(x), len(y)
    if n1 < 2 or n2 < 2:
        raise ValueError("each group needs at least two observations")
    v1 = float(x.var(ddof=1))
    v2 = float(y.var(ddof=1))
    if v1 == 0.0 or v2 == 0.0:
        raise ValueError("each group needs positive sample variance")
    se1 = v1 / n1
    se2 = v2 / n2
    t = (float(x.mean()) - float(y.mean())) / math.sqrt(se1 + se2)
    df = (se1 + se2) ** 2 / (se1**2 / (n1 - 1) + se2**2 / (n2 - 1))
    return t, df


def welch_t_batch(counts: np.ndarray, n1: int) -> np.ndarray:
    """Row-wise Welch t for samples whose first ``n1`` columns form group 1.

    Rows with zero pooled standard error give +-inf (or nan for 0/0).
    """
    c = np.asarray(counts, dtype=np.float64)
    g1, g2 = c[:, :n1], c[:, n1:]
    se = g1.var(axis=1, ddof=1) / g1.shape[1] + g2.var(axis=1, ddof=1) / g2.shape[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        return (g1.mean(axis=1) - g2.mean(axis=1)) / np.sqrt(se)


@dataclass(frozen=True)
class PenguinData:
    group1: tuple
    group2: tuple

    @property
    def total_pairs(self) -> int:
        return sum(self.group1) + sum(self.group2)

    @property
    def islands(self) -> int:
        return len(self.group1) + len(self.group2)


# yellow-eyed penguin breeding pairs: Stewart Island locations, then cat-free islands
PENGUINS = PenguinData(
    group1=(7, 3, 3, 7, 3, 7, 3, 10, 1, 7, 4, 1, 3, 2, 1, 2, 9, 4, 2),
    group2=(15, 32, 1, 13, 14, 11, 1, 3, 2, 7),
)


class PenguinBootstrapSource(SampleSource):
    """Parametric bootstrap of the two-sample Welch statistic.

    Each draw allocates all pairs independently and uniformly over the
    islands, splits islands into the original groups and emits 1 iff the
    resampled |t| is at least the observed |t|.
    """

    def __init__(self, data: PenguinData = PENGUINS, seed: int = 0):
        super().__init__()
        self.data = data
        self.seed = seed
        self.observed_t, self.observed_df = welch_t(data.group1, data.group2)
        self._rng = np.random.Generator(np.random.PCG64(seed))
        self._pvals = np.full(data.islands, 1.0 / data.islands)

    def resample_counts(self, k: int) -> np.ndarray:
        return self._rng.multinomial(self.data.total_pairs, self._pvals, size=k)

    def _generate(self, k):
        t = welch_t_batch(self.resample_counts(k), len(self.data.group1))
        with np.errstate(invalid="ignore"):
            return np.abs(t) >= abs(self.observed_t)


def penguin_bootstrap_source(data: PenguinData = PENGUINS, seed: int = 0) -> PenguinBootstrapSource:
    return PenguinBootstrapSource(data, seed)


def load_two_sample_csv(path) -> PenguinData:
    """Read a ``group,count`` CSV with exactly two distinct group labels (first seen = group 1)."""
    groups: dict = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["group", "count"]:
            raise ValueError(f"{os.fspath(path)}: expected header 'group,count'")
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{os.fspath(path)}:{lineno}: expected two fields")
            groups.setdefault(row[0].strip(), []).append(int(row[1]))
    if len(groups) != 2:
        raise ValueError(f"{os.fspath(path)}: expected exactly two groups, found {len(groups)}")
    g1, g2 = groups.values()
    return PenguinData(tuple(g1), tuple(g2))
