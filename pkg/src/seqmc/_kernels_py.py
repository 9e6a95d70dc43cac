"""Reference implementations of the numeric kernels (numpy, no compilation).

Every function here has a twin in ``_kernels_c.pyx`` with the same signature.
Boundary arrays are indexed by ``n - 1``.  A distribution over in-flight
partial sums is a float array ``mass`` where ``mass[i]`` is P(S_n = offset + i).
"""
import math

import numpy as np

from .binom import log_pmf_unchecked


def csm_bounds(n_start, n_end, alpha, log_eps, l_prev, u_prev):
    """Implied CSM boundaries for n = n_start..n_end, warm-started from the previous step."""
    count = n_end - n_start + 1
    lower = np.empty(count, dtype=np.int64)
    upper = np.empty(count, dtype=np.int64)
    lp = log_pmf_unchecked
    for idx in range(count):
        n = n_start + idx
        lnn = math.log(n + 1)
        mode = min(int(math.floor((n + 1) * alpha)), n)
        # the mode is always inside: (n + 1) * max_k b(n, alpha, k) >= 1 > eps
        k = max(u_prev - 1, mode)
        if k > n:
            k = n
        if lnn + lp(n, alpha, k) > log_eps:
            while k < n and lnn + lp(n, alpha, k + 1) > log_eps:
                k += 1
        else:
            k -= 1
            while not lnn + lp(n, alpha, k) > log_eps:
                k -= 1
        u_prev = k + 1

        k = min(l_prev + 1, mode)
        if k < 0:
            k = 0
        if lnn + lp(n, alpha, k) > log_eps:
            while k > 0 and lnn + lp(n, alpha, k - 1) > log_eps:
                k -= 1
        else:
            k += 1
            while not lnn + lp(n, alpha, k) > log_eps:
                k += 1
        l_prev = k - 1
        lower[idx] = l_prev
        upper[idx] = u_prev
    return lower, upper


def _step(mass, p, q):
    # split each cell so that stay + move == mass exactly (Sterbenz), which
    # keeps total probability conserved over long horizons
    m = len(mass)
    if m == 0:
        return mass
    new = np.empty(m + 1)
    if p <= 0.5:
        stay = mass * q
        move = mass - stay
    else:
        move = mass * p
        stay = mass - move
    new[0] = stay[0]
    new[1:m] = stay[1:] + move[:-1]
    new[m] = move[m - 1]
    return new


def propagate(lower, upper, p, n0, n1, mass, offset):
    """Advance the in-flight distribution from step n0 to n1 under Bernoulli(p) increments.

    Returns ``(mass, offset, up_hits, low_hits, alive)`` where the three
    trailing arrays hold, per step, the mass absorbed at the upper boundary,
    at the lower boundary, and the mass still in flight.
    """
    q = 1.0 - p
    steps = n1 - n0
    up_hits = np.zeros(steps)
    low_hits = np.zeros(steps)
    alive = np.zeros(steps)
    mass = np.asarray(mass, dtype=np.float64)
    for idx in range(steps):
        n = n0 + idx + 1
        if len(mass) == 0:
            continue
        new = _step(mass, p, q)
        top = len(new)
        lo = lower[n - 1] - offset + 1  # first surviving index
        hi = upper[n - 1] - offset  # first absorbed-above index
        if lo > 0:
            low_hits[idx] = new[: min(lo, top)].sum()
        else:
            lo = 0
        if hi < top:
            up_hits[idx] = new[max(hi, 0):].sum()
        else:
            hi = top
        if lo >= hi:
            mass = new[:0]
        else:
            mass = new[lo:hi]
        offset += lo
        alive[idx] = mass.sum()
    return mass, offset, up_hits, low_hits, alive


def simctest_extend(alpha, eps, n0, mass, offset, cum_up, cum_low):
    """Run the SIMCTEST boundary recursion for steps n0+1 .. n0+len(eps).

    ``eps[i]`` is the spending budget at step ``n0 + 1 + i``.  Returns
    ``(lower, upper, up_trace, low_trace, mass, offset, cum_up, cum_low)``.
    """
    q = 1.0 - alpha
    steps = len(eps)
    lower = np.empty(steps, dtype=np.int64)
    upper = np.empty(steps, dtype=np.int64)
    up_trace = np.empty(steps)
    low_trace = np.empty(steps)
    mass = np.asarray(mass, dtype=np.float64)
    for idx in range(steps):
        e = eps[idx]
        new = _step(mass, alpha, q)
        m = len(new) - 1
        tails = np.cumsum(new[::-1])[::-1]
        cnt = int(np.count_nonzero(tails + cum_up > e))
        heads = np.cumsum(new)
        cntl = int(np.count_nonzero(heads + cum_low <= e))
        if cntl >= cnt:
            raise ValueError(f"no in-flight mass left at step {n0 + idx + 1}; epsilon too large")
        if cnt <= m:
            cum_up = cum_up + tails[cnt]
        if cntl > 0:
            cum_low = cum_low + heads[cntl - 1]
        upper[idx] = offset + cnt
        lower[idx] = offset + cntl - 1
        mass = new[cntl:cnt]
        offset += cntl
        up_trace[idx] = cum_up
        low_trace[idx] = cum_low
    return lower, upper, up_trace, low_trace, mass, offset, cum_up, cum_low
