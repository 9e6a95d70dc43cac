# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``.

Arithmetic is written in the same order as the numpy fallback so that
boundary tables agree bit for bit; absorbed masses may differ in the last
ulp because numpy sums pairwise.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, floor, fabs, INFINITY

cnp.import_array()

cdef double LN_2PI = 1.8378770664093453

cdef double[16] STIRLERR_TABLE
STIRLERR_TABLE[:] = [
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
]

cdef double S0 = 1.0 / 12
cdef double S1 = 1.0 / 360
cdef double S2 = 1.0 / 1260
cdef double S3 = 1.0 / 1680
cdef double S4 = 1.0 / 1188


cdef inline double stirlerr(long n) nogil:
    cdef double nn
    if n <= 15:
        return STIRLERR_TABLE[n]
    nn = <double>n * n
    if n > 500:
        return (S0 - S1 / nn) / n
    if n > 80:
        return (S0 - (S1 - S2 / nn) / nn) / n
    if n > 35:
        return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    return (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n


cdef inline double bd0(double x, double np_) nogil:
    cdef double d = x - np_
    cdef double v, s, ej, v2, s1
    cdef long j
    if fabs(d) < 0.1 * (x + np_):
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
    return x * log(x / np_) + np_ - x


cdef double log_pmf(long n, double p, long x) nogil:
    cdef double q = 1.0 - p
    cdef double lc, lf
    if p == 0.0:
        return 0.0 if x == 0 else -INFINITY
    if q == 0.0:
        return 0.0 if x == n else -INFINITY
    if x == 0:
        if n == 0:
            return 0.0
        if p < 0.1:
            return -bd0(n, n * q) - n * p
        return n * log(q)
    if x == n:
        if q < 0.1:
            return -bd0(n, n * p) - n * q
        return n * log(p)
    lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * q)
    lf = LN_2PI + log(<double>x) + log1p(-(<double>x) / n)
    return lc - 0.5 * lf


def log_binom_pmf(long n, double p, long x):
    return log_pmf(n, p, x)


def csm_bounds(long n_start, long n_end, double alpha, double log_eps, long l_prev, long u_prev):
    cdef long count = n_end - n_start + 1
    cdef cnp.ndarray[cnp.int64_t, ndim=1] lower = np.empty(count, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] upper = np.empty(count, dtype=np.int64)
    cdef long idx, n, k, mode
    cdef double lnn
    with nogil:
        for idx in range(count):
            n = n_start + idx
            lnn = log(<double>(n + 1))
            mode = <long>floor((n + 1) * alpha)
            if mode > n:
                mode = n
            k = u_prev - 1
            if k < mode:
                k = mode
            if k > n:
                k = n
            if lnn + log_pmf(n, alpha, k) > log_eps:
                while k < n and lnn + log_pmf(n, alpha, k + 1) > log_eps:
                    k += 1
            else:
                k -= 1
                while not (lnn + log_pmf(n, alpha, k) > log_eps):
                    k -= 1
            u_prev = k + 1

            k = l_prev + 1
            if k > mode:
                k = mode
            if k < 0:
                k = 0
            if lnn + log_pmf(n, alpha, k) > log_eps:
                while k > 0 and lnn + log_pmf(n, alpha, k - 1) > log_eps:
                    k -= 1
            else:
                k += 1
                while not (lnn + log_pmf(n, alpha, k) > log_eps):
                    k += 1
            l_prev = k - 1
            lower[idx] = l_prev
            upper[idx] = u_prev
    return lower, upper


cdef inline void step(double* a, long m, double* out, double p, double q) nogil:
    cdef long i
    cdef double stay, move, carry
    if m == 0:
        out[0] = 0.0
        return
    carry = 0.0
    for i in range(m):
        if p <= 0.5:
            stay = a[i] * q
            move = a[i] - stay
        else:
            move = a[i] * p
            stay = a[i] - move
        if i == 0:
            out[0] = stay
        else:
            out[i] = stay + carry
        carry = move
    out[m] = carry


def propagate(const cnp.int64_t[::1] lower, const cnp.int64_t[::1] upper, double p,
              long n0, long n1, mass, long offset):
    cdef long steps = n1 - n0
    cdef double q = 1.0 - p
    cdef double[::1] m0 = np.ascontiguousarray(mass, dtype=np.float64)
    cdef long m = m0.shape[0]
    cdef long width = m + 2
    cdef long idx, n, i, lo, hi, top
    cdef double acc
    if steps > 0:
        width += max(0, int(np.max(np.asarray(upper[n0:n1]) - np.asarray(lower[n0:n1]))))
    cdef double[::1] a = np.zeros(width)
    cdef double[::1] b = np.zeros(width)
    cdef double[::1] up_hits = np.zeros(steps)
    cdef double[::1] low_hits = np.zeros(steps)
    cdef double[::1] alive = np.zeros(steps)
    cdef double[::1] tmp
    for i in range(m):
        a[i] = m0[i]
    with nogil:
        for idx in range(steps):
            n = n0 + idx + 1
            if m == 0:
                continue
            step(&a[0], m, &b[0], p, q)
            top = m + 1
            lo = lower[n - 1] - offset + 1
            hi = upper[n - 1] - offset
            if lo > 0:
                acc = 0.0
                for i in range(min(lo, top)):
                    acc += b[i]
                low_hits[idx] = acc
            else:
                lo = 0
            if hi < top:
                acc = 0.0
                for i in range(max(hi, 0), top):
                    acc += b[i]
                up_hits[idx] = acc
            else:
                hi = top
            acc = 0.0
            if lo >= hi:
                m = 0
            else:
                m = hi - lo
                for i in range(m):
                    a[i] = b[lo + i]
                    acc += a[i]
            offset += lo
            alive[idx] = acc
    return (np.asarray(a[:m]).copy(), offset, np.asarray(up_hits), np.asarray(low_hits),
            np.asarray(alive))


def simctest_extend(double alpha, eps, long n0, mass, long offset, double cum_up, double cum_low):
    cdef double[::1] e = np.ascontiguousarray(eps, dtype=np.float64)
    cdef long steps = e.shape[0]
    cdef double q = 1.0 - alpha
    cdef double[::1] m0 = np.ascontiguousarray(mass, dtype=np.float64)
    cdef long m = m0.shape[0]
    # the in-flight width is bounded by the distance between the boundaries,
    # which stays far below m + steps; grow on demand
    cdef long width = m + 64
    cdef double[::1] a = np.zeros(width)
    cdef double[::1] b = np.zeros(width)
    cdef cnp.int64_t[::1] lower = np.empty(steps, dtype=np.int64)
    cdef cnp.int64_t[::1] upper = np.empty(steps, dtype=np.int64)
    cdef double[::1] up_trace = np.empty(steps)
    cdef double[::1] low_trace = np.empty(steps)
    cdef long idx, i, cnt, cntl, mm
    cdef double tail, head, t, ee
    for i in range(m):
        a[i] = m0[i]
    for idx in range(steps):
        if m + 2 > width:
            width = 2 * width
            a = np.concatenate([np.asarray(a), np.zeros(width - a.shape[0])])
            b = np.zeros(width)
        with nogil:
            ee = e[idx]
            step(&a[0], m, &b[0], alpha, q)
            mm = m  # new support has mm + 1 points
            tail = 0.0
            i = mm
            while i >= 0:
                t = tail + b[i]
                if t + cum_up <= ee:
                    tail = t
                    i -= 1
                else:
                    break
            cnt = i + 1
            head = 0.0
            i = 0
            while i <= mm:
                t = head + b[i]
                if t + cum_low <= ee:
                    head = t
                    i += 1
                else:
                    break
            cntl = i
        if cntl >= cnt:
            raise ValueError(f"no in-flight mass left at step {n0 + idx + 1}; epsilon too large")
        with nogil:
            if cnt <= mm:
                cum_up = cum_up + tail
            if cntl > 0:
                cum_low = cum_low + head
            upper[idx] = offset + cnt
            lower[idx] = offset + cntl - 1
            m = cnt - cntl
            for i in range(m):
                a[i] = b[cntl + i]
            offset += cntl
            up_trace[idx] = cum_up
            low_trace[idx] = cum_low
    return (np.asarray(lower), np.asarray(upper), np.asarray(up_trace), np.asarray(low_trace),
            np.asarray(a[:m]).copy(), offset, cum_up, cum_low)
