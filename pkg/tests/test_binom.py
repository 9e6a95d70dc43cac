import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqmc.binom import BinomialParams, binom_pmf, log_binom_pmf


def exact_pmf(n, p, x):
    return Fraction(math.comb(n, x)) * p**x * (1 - p) ** (n - x)


def test_trivial_values():
    assert log_binom_pmf(BinomialParams(1, 0.5, 1)) == pytest.approx(math.log(0.5), rel=1e-15)
    assert log_binom_pmf(BinomialParams(0, 0.3, 0)) == 0.0
    assert binom_pmf(BinomialParams(2, 0.5, 1)) == pytest.approx(0.5, rel=1e-15)
    assert binom_pmf(BinomialParams(1, 0.05, 1)) == pytest.approx(0.05, rel=1e-15)


def test_repeated_product():
    prod = 1.0
    for _ in range(10):
        prod *= 0.95
    assert log_binom_pmf(BinomialParams(10, 0.05, 0)) == pytest.approx(math.log(prod), rel=1e-14)
    assert binom_pmf(BinomialParams(300, 0.05, 0)) == pytest.approx(math.exp(300 * math.log(0.95)), rel=1e-12)
    assert binom_pmf(BinomialParams(300, 0.05, 0)) == pytest.approx(2.07e-7, rel=1e-2)


def test_endpoints_are_exact():
    assert log_binom_pmf(BinomialParams(5, 0.0, 0)) == 0.0
    assert log_binom_pmf(BinomialParams(5, 0.0, 1)) == -math.inf
    assert log_binom_pmf(BinomialParams(5, 1.0, 5)) == 0.0
    assert log_binom_pmf(BinomialParams(5, 1.0, 4)) == -math.inf
    assert binom_pmf(BinomialParams(5, 1.0, 4)) == 0.0


@pytest.mark.parametrize("n,p,x", [(3, 0.5, 4), (3, 0.5, -1), (3, 1.5, 1), (3, -0.1, 0), (-1, 0.5, 0)])
def test_invalid_params(n, p, x):
    with pytest.raises(ValueError):
        BinomialParams(n, p, x)


@pytest.mark.parametrize("p", [0.01, 0.05, 0.5, 0.95])
@pytest.mark.parametrize("n", [1, 2, 7, 50, 200])
def test_sums_to_one(n, p):
    total = sum(binom_pmf(BinomialParams(n, p, x)) for x in range(n + 1))
    assert abs(total - 1.0) <= 1e-10


@given(st.integers(0, 400), st.one_of(st.just(0.0), st.just(1.0), st.floats(1e-12, 1 - 1e-12)), st.data())
def test_symmetry(n, p, data):
    x = data.draw(st.integers(0, n))
    a = binom_pmf(BinomialParams(n, p, x))
    b = binom_pmf(BinomialParams(n, 1.0 - p, n - x))
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("p", [Fraction(1, 4), Fraction(1, 2)])
def test_exact_rationals(p):
    for n in range(31):
        for x in range(n + 1):
            want = math.log(exact_pmf(n, p, x))
            got = log_binom_pmf(BinomialParams(n, float(p), x))
            assert got == pytest.approx(want, rel=1e-12, abs=1e-14)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 10**7), st.sampled_from([0.001, 0.01, 0.05, 0.3, 0.5, 0.77]), st.data())
def test_large_n_against_mpmath(n, p, data):
    # draw x mostly near the bulk, where values are moderate
    centre = int(n * p)
    spread = int(10 * math.sqrt(n * p * (1 - p))) + 2
    x = data.draw(st.integers(max(0, centre - spread), min(n, centre + spread)))
    mpmath.mp.dps = 40
    pm = mpmath.mpf(p)
    want = (mpmath.loggamma(n + 1) - mpmath.loggamma(x + 1) - mpmath.loggamma(n - x + 1)
            + x * mpmath.log(pm) + (n - x) * mpmath.log(1 - pm))
    got = log_binom_pmf(BinomialParams(n, p, x))
    assert got == pytest.approx(float(want), rel=1e-12, abs=1e-13)


def test_compiled_log_pmf_matches():
    c = pytest.importorskip("seqmc._kernels_c")
    rng = np.random.default_rng(3)
    for _ in range(2000):
        n = int(rng.integers(0, 10**6))
        x = int(rng.integers(0, n + 1))
        p = float(rng.choice([0.0, 0.01, 0.05, 0.5, 0.93, 1.0]))
        assert c.log_binom_pmf(n, p, x) == log_binom_pmf(BinomialParams(n, p, x))
