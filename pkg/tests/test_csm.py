import math
from fractions import Fraction

import numpy as np
import pytest

from seqmc.core import Decision, SourceExhausted, TestConfig
from seqmc.csm import CsmBoundaryTable, csm_boundaries, csm_run, csm_should_stop
from seqmc.risk import simulate_paths
from seqmc.sources import SequenceSource, fixed_p_source

CFG = TestConfig(0.05, 1e-3)


def brute_bounds(n, alpha, eps):
    """Exact rational evaluation of the stopping rule at the given float inputs."""
    a, e = Fraction(alpha), Fraction(eps)
    inside = [k for k in range(n + 1) if (n + 1) * math.comb(n, k) * a**k * (1 - a) ** (n - k) > e]
    return min(inside) - 1, max(inside) + 1


def first_stop(x, eps):
    n = 0
    while (n + 1) * x**n > eps:
        n += 1
    return n


@pytest.mark.parametrize("n,s,expected", [(1, 1, False), (300, 0, True), (200, 0, False)])
def test_should_stop_examples(n, s, expected):
    assert csm_should_stop(n, s, CFG) is expected


def test_should_stop_validates():
    with pytest.raises(ValueError):
        csm_should_stop(3, 4, CFG)
    with pytest.raises(ValueError):
        csm_should_stop(0, 0, CFG)


def test_first_boundary():
    b = csm_boundaries(1, CFG)
    assert b.at(1) == (-1, 2)


@pytest.mark.parametrize("alpha", [0.05, 0.02, 0.01, 0.005, 0.5])
@pytest.mark.parametrize("eps", [1e-2, 1e-3])
def test_bounds_against_enumeration(alpha, eps):
    b = csm_boundaries(400, TestConfig(alpha, eps))
    for n in list(range(1, 60)) + [97, 150, 233]:
        assert b.at(n) == brute_bounds(n, alpha, eps)


def test_stop_rule_equals_boundaries():
    b = csm_boundaries(2000, CFG)
    for n in range(1, 2001):
        lo, up = b.at(n)
        for s in range(n + 1):
            assert csm_should_stop(n, s, CFG) == (s >= up or s <= lo), (n, s)


@pytest.mark.parametrize("alpha", [0.05, 0.01])
def test_lower_boundary_below_alpha_n(alpha):
    b = csm_boundaries(100_000, TestConfig(alpha, 1e-3))
    n = np.arange(1, 100_001)
    ceil_an = np.ceil(alpha * n).astype(np.int64)
    assert np.all(b.lower <= ceil_an - 1)
    assert np.all(b.lower < alpha * n)
    assert np.all(b.upper > alpha * n)


@pytest.mark.parametrize("alpha", [0.05, 0.02, 0.01, 0.005])
def test_boundaries_track_alpha_n(alpha):
    b = csm_boundaries(5000, TestConfig(alpha, 1e-3))
    assert np.all(np.diff(b.lower) >= 0) and np.all(np.diff(b.upper) >= 0)
    mid = alpha * 5000
    lo, up = b.at(5000)
    assert lo < mid < up
    assert (up - lo) / 5000 < 0.05


def test_table_growth_is_consistent():
    t = CsmBoundaryTable(CFG, initial=10)
    t.ensure(5000)
    full = csm_boundaries(5000, CFG)
    np.testing.assert_array_equal(t.lower[:5000], full.lower)
    np.testing.assert_array_equal(t.upper[:5000], full.upper)


def test_all_zeros_run():
    r = csm_run(fixed_p_source(0.0, 1), CFG)
    assert r.steps == first_stop(0.95, 1e-3)
    assert r.decision is Decision.REJECT_NULL and r.stopped_by == "lower"
    assert r.estimate == 0.0


def test_all_ones_run():
    r = csm_run(fixed_p_source(1.0, 1), CFG)
    assert r.steps == 3 == first_stop(0.05, 1e-3)
    assert r.decision is Decision.ACCEPT_NULL and r.estimate == 1.0


def test_truncation_gives_no_decision():
    r = csm_run(fixed_p_source(0.05, 4), TestConfig(0.05, 1e-3, max_steps=50))
    assert r.steps == 50 and r.decision is Decision.NO_DECISION
    assert r.estimate == r.successes / 50


def test_source_exhausted():
    with pytest.raises(SourceExhausted):
        csm_run(SequenceSource([0, 1, 0]), CFG)


def test_deterministic():
    a = csm_run(fixed_p_source(0.1, 99), CFG)
    b = csm_run(fixed_p_source(0.1, 99), CFG)
    assert a == b


def test_estimate_side_matches_decision():
    for seed in range(200):
        r = csm_run(fixed_p_source(0.07, seed), CFG)
        if r.stopped_by == "upper":
            assert r.estimate > 0.05
        else:
            assert r.estimate <= 0.05


def test_runner_matches_vectorised_paths():
    # the per-draw runner and the batch simulator share nothing but boundaries
    b = csm_boundaries(20000, CFG)
    steps, succ, side = simulate_paths(b, 0.2, 2000, 11)
    runs = [csm_run(fixed_p_source(0.2, s), CFG).steps for s in range(2000)]
    assert abs(np.mean(runs) - steps.mean()) < 4 * np.std(runs) / math.sqrt(1000)


@pytest.mark.parametrize("p", [0.01, 0.2])
def test_terminates_away_from_alpha(p):
    b = csm_boundaries(100_000, TestConfig(0.05, 1e-3))
    steps, succ, side = simulate_paths(b, p, 1000, 5)
    assert np.all(side != 0)
    assert steps.max() < 100_000
