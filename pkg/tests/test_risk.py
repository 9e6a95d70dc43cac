import math
import warnings

import numpy as np
import pytest

from seqmc.core import BoundaryExhausted, TestConfig
from seqmc.csm import CsmBoundaryTable, csm_boundaries
from seqmc.risk import (
    evolve,
    expected_stopping_time,
    hitting_probabilities,
    initial_state,
    resampling_risk,
    simulate_paths,
    spend_rate_series,
)
from seqmc.simctest import SimctestBuilder, SpendingSequence, simctest_boundaries

CFG = TestConfig(0.05, 1e-3)


def enumerate_paths(bounds, p, n_max):
    """Walk every path prefix depth-first and record the step of its first crossing."""
    up = np.zeros(n_max)
    low = np.zeros(n_max)

    def walk(n, s, prob):
        if n == n_max:
            return
        for b in (0, 1):
            t = s + b
            q = prob * (p if b else 1 - p)
            if t >= bounds.upper[n]:
                up[n] += q
            elif t <= bounds.lower[n]:
                low[n] += q
            else:
                walk(n + 1, t, q)

    walk(0, 0, 1.0)
    return np.cumsum(up), np.cumsum(low)


@pytest.fixture(scope="module")
def small_bounds():
    # loose epsilon so that both boundaries are reached within a few steps
    return {
        "csm": csm_boundaries(14, TestConfig(0.3, 0.2)),
        "simctest": simctest_boundaries(14, TestConfig(0.3, 0.2), SpendingSequence.default(0.2, k=5)),
    }


@pytest.mark.parametrize("method", ["csm", "simctest"])
@pytest.mark.parametrize("p", [0.05, 0.3, 0.6])
def test_against_path_enumeration(small_bounds, method, p):
    b = small_bounds[method]
    up, low = enumerate_paths(b, p, 14)
    tr = hitting_probabilities(b, p)
    assert up[-1] + low[-1] > 0
    np.testing.assert_allclose(tr.upper, up, atol=1e-14)
    np.testing.assert_allclose(tr.lower, low, atol=1e-14)
    np.testing.assert_allclose(tr.alive, 1 - up - low, atol=1e-13)


def test_evolve_single_steps():
    d = evolve(initial_state(), 0.3, -1, 2)
    assert d.step == 1 and d.offset == 0
    np.testing.assert_allclose(d.mass, [0.7, 0.3])
    d = evolve(d, 0.3, 0, 2)  # S=0 absorbed below, S=2 absorbed above
    assert d.stopped_lower == pytest.approx(0.49)
    assert d.stopped_upper == pytest.approx(0.09)
    assert d.offset == 1 and d.mass.tolist() == pytest.approx([0.42])
    assert d.total == pytest.approx(1.0, abs=1e-15)


def test_evolve_rejects_bad_p():
    with pytest.raises(ValueError):
        evolve(initial_state(), 1.5, -1, 2)


def test_evolve_matches_trace():
    b = csm_boundaries(300, CFG)
    d = initial_state()
    for n in range(1, 301):
        d = evolve(d, 0.04, *b.at(n))
    tr = hitting_probabilities(b, 0.04)
    assert d.stopped_upper == pytest.approx(tr.upper[-1], abs=1e-15)
    assert d.stopped_lower == pytest.approx(tr.lower[-1], abs=1e-15)
    np.testing.assert_allclose(d.mass, tr.final.mass, atol=1e-16)


@pytest.mark.parametrize("p", [0.0, 1.0])
def test_degenerate_p(p):
    b = csm_boundaries(500, CFG)
    tr = hitting_probabilities(b, p)
    assert tr.alive[-1] == 0.0
    assert (tr.upper[-1] if p else tr.lower[-1]) == 1.0


def test_conservation_long():
    b = csm_boundaries(50_000, CFG)
    tr = hitting_probabilities(b, 0.05)
    total = tr.upper + tr.lower + tr.alive
    assert np.max(np.abs(total - 1)) <= 1e-12


def test_exhausted_table():
    with pytest.raises(BoundaryExhausted):
        hitting_probabilities(csm_boundaries(10, CFG), 0.05, n_max=11)


def test_risk_decreases_away_from_alpha():
    b = csm_boundaries(5000, CFG)
    below = [resampling_risk(b, p) for p in (0.03, 0.04, 0.045, 0.049)]
    above = [resampling_risk(b, p) for p in (0.07, 0.06, 0.055, 0.051)]
    assert below == sorted(below) and above == sorted(above)


def test_force_adds_inflight_mass():
    b = csm_boundaries(2000, CFG)
    plain = resampling_risk(b, 0.05)
    forced = resampling_risk(b, 0.05, truncation_rule="force")
    assert forced > plain
    with pytest.raises(ValueError):
        resampling_risk(b, 0.05, truncation_rule="later")


@pytest.mark.parametrize("method", ["csm", "simctest"])
def test_mc_agrees_with_dp(method):
    if method == "csm":
        b = csm_boundaries(3000, CFG)
    else:
        b = simctest_boundaries(3000, CFG, SpendingSequence.default(1e-3))
    tr = hitting_probabilities(b, 0.06)
    runs = 40_000
    steps, succ, side = simulate_paths(b, 0.06, runs, 7)
    for observed, expected in ((np.mean(side == 1), tr.upper[-1]),
                               (np.mean(side == -1), tr.lower[-1]),
                               (np.mean(side == 0), tr.alive[-1])):
        se = math.sqrt(max(expected * (1 - expected), 1e-12) / runs)
        assert abs(observed - expected) <= 4 * se + 1e-9


def test_simulated_paths_are_consistent():
    b = csm_boundaries(2000, CFG)
    steps, succ, side = simulate_paths(b, 0.05, 5000, 3)
    idx = steps - 1
    assert np.all(succ[side == 1] >= b.upper[idx[side == 1]])
    assert np.all(succ[side == -1] <= b.lower[idx[side == -1]])
    assert np.all(steps[side == 0] == 2000)
    a, _, _ = simulate_paths(b, 0.05, 5000, 3)
    np.testing.assert_array_equal(a, steps)


def test_effort_all_ones():
    e = expected_stopping_time(CsmBoundaryTable(CFG), 1.0)
    assert e.expectation == 3.0 and e.converged


def test_effort_against_mc():
    table = CsmBoundaryTable(CFG)
    e = expected_stopping_time(table, 0.2)
    steps, _, side = simulate_paths(csm_boundaries(20_000, CFG), 0.2, 20_000, 1)
    assert np.all(side != 0)
    assert abs(steps.mean() - e.expectation) < 4 * steps.std() / math.sqrt(len(steps))


def test_effort_grows_near_alpha():
    t = CsmBoundaryTable(CFG)
    vals = [expected_stopping_time(t, p).expectation for p in (0.2, 0.1, 0.07, 0.06)]
    assert vals == sorted(vals)


def test_effort_grows_as_epsilon_shrinks():
    vals = [expected_stopping_time(CsmBoundaryTable(TestConfig(0.05, e)), 0.08).expectation
            for e in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert vals == sorted(vals)


def test_effort_simctest_builder():
    b = SimctestBuilder(CFG, SpendingSequence.default(1e-3))
    e = expected_stopping_time(b, 0.1)
    assert e.converged and 0 < e.residual_mass < 1e-10


def test_effort_cap_warns():
    b = csm_boundaries(500, CFG)
    with pytest.warns(RuntimeWarning):
        e = expected_stopping_time(b, 0.05)
    assert not e.converged and e.steps == 500
    assert e.expectation <= 501


def test_effort_fixed_truncates_sum():
    b = csm_boundaries(500, CFG)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        e = expected_stopping_time(b, 0.05)
    tr = hitting_probabilities(b, 0.05)
    assert e.expectation == pytest.approx(1 + tr.alive.sum(), rel=1e-14)


def test_rate_series_shape():
    b = csm_boundaries(20_000, CFG)
    r = spend_rate_series(b, 1.5, stride=100)
    assert r.n[0] == 100 and r.n[-1] == 20_000
    assert np.all(r.value >= 0)
    assert -2 < r.slope < -1
    with pytest.raises(ValueError):
        spend_rate_series(b, 1.5, side="middle")


def test_rate_series_sums_to_hitting_mass():
    b = csm_boundaries(5000, CFG)
    r = spend_rate_series(b, 0.0, stride=50, side="total")
    tr = hitting_probabilities(b, 0.05)
    assert r.value.sum() * 50 == pytest.approx(tr.upper[-1] + tr.lower[-1], rel=1e-12)
