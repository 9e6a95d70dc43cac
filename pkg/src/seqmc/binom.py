"""Binomial probability mass in log space.

Uses Loader's saddle-point expansion (the ``dbinom`` algorithm found in R)
so that the log mass stays accurate for step counts far beyond the range
where ``lgamma`` differences lose their significant digits.
"""
import math
from dataclasses import dataclass

__all__ = ["BinomialParams", "log_binom_pmf", "binom_pmf", "stirlerr", "bd0"]

_LN_2PI = math.log(2.0 * math.pi)

# lgamma(n + 1) - (n + 1/2) ln n + n - ln sqrt(2 pi) for n = 0..15
_STIRLERR_TABLE = (
    0.0,
    0.08106146679532725822,
    0.041340695955409294094,
    0.027677925684998339149,
    0.020790672103765093112,
    0.016644691189821192163,
    0.013876128823070747999,
    0.011896709945891770095,
    0.010411265261972096497,
    0.0092554621827127329177,
    0.0083305634333628712565,
    0.007573675487951840795,
    0.0069428401072095298657,
    0.0064089941880042070684,
    0.0059513701127588477356,
    0.005554733551962801371,
)

_S0 = 1.0 / 12
_S1 = 1.0 / 360
_S2 = 1.0 / 1260
_S3 = 1.0 / 1680
_S4 = 1.0 / 1188


@dataclass(frozen=True)
class BinomialParams:
    n: int
    p: float
    x: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"n must be non-negative, got {self.n}")
        if not 0 <= self.x <= self.n:
            raise ValueError(f"x must lie in [0, n={self.n}], got {self.x}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")


def stirlerr(n: int) -> float:
    """Error of Stirling's approximation to ln(n!) for integer n >= 0."""
    if n <= 15:
        return _STIRLERR_TABLE[n]
    nn = float(n) * n
    if n > 500:
        return (_S0 - _S1 / nn) / n
    if n > 80:
        return (_S0 - (_S1 - _S2 / nn) / nn) / n
    if n > 35:
        return (_S0 - (_S1 - (_S2 - _S3 / nn) / nn) / nn) / n
    return (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / n


def bd0(x: float, np_: float) -> float:
    """Deviance term x ln(x / np) + np - x, evaluated without cancellation."""
    d = x - np_
    if abs(d) < 0.1 * (x + np_):
        v = d / (x + np_)
        s = d * v
        ej = 2.0 * x * v
        v2 = v * v
        j = 1
        while True:
            ej *= v2
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
            j += 1
    return x * math.log(x / np_) + np_ - x


def _log_pmf(n: int, p: float, x: int) -> float:
    q = 1.0 - p
    if p == 0.0:
        return 0.0 if x == 0 else -math.inf
    if q == 0.0:
        return 0.0 if x == n else -math.inf
    if x == 0:
        if n == 0:
            return 0.0
        return -bd0(n, n * q) - n * p if p < 0.1 else n * math.log(q)
    if x == n:
        return -bd0(n, n * p) - n * q if q < 0.1 else n * math.log(p)
    lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * q)
    lf = _LN_2PI + math.log(x) + math.log1p(-x / n)
    return lc - 0.5 * lf


def log_binom_pmf(params: BinomialParams) -> float:
    """Natural log of C(n, x) p^x (1-p)^(n-x); ``-inf`` for impossible outcomes.

    >>> log_binom_pmf(BinomialParams(1, 0.5, 1)) == math.log(0.5)
    True
    >>> log_binom_pmf(BinomialParams(0, 0.3, 0))
    0.0
    """
    return _log_pmf(params.n, params.p, params.x)


def binom_pmf(params: BinomialParams) -> float:
    return math.exp(_log_pmf(params.n, params.p, params.x))


def log_pmf_unchecked(n: int, p: float, x: int) -> float:
    """Same as :func:`log_binom_pmf` without argument validation (hot loops)."""
    return _log_pmf(n, p, x)
