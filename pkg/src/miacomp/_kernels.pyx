# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: hypergeometric series and Monte Carlo interference sums.

Mirrors ``miacomp._pykernels`` function for function; ``miacomp._backend``
picks whichever is importable.
"""

import numpy as np

from libc.math cimport M_PI, fabs, pow, sin, sqrt

from miacomp.errors import AccuracyError

cdef double SWITCH = 3.0
cdef double RTOL = 1e-15
cdef long MAX_TERMS = 1000000


cdef int _pfaff_sum(double shift_num, double shift_den, double w, double* out) noexcept nogil:
    # sum_n prod_{k<n} (k + shift_num) / (k + shift_den) * w, all terms positive
    cdef double s = 1.0, term = 1.0
    cdef long n = 0
    while n < MAX_TERMS:
        term *= (n + shift_num) / (n + shift_den) * w
        s += term
        n += 1
        if term < RTOL * s:
            out[0] = s
            return 0
    return 1


cdef int _hyp_f(double d, double v, double* out) noexcept nogil:
    cdef double s, x, p, tn
    cdef long n
    if v <= SWITCH:
        if _pfaff_sum(1.0, 1.0 - d, v / (1.0 + v), &s):
            return 1
        out[0] = s / (1.0 + v)
        return 0
    x = 1.0 / v
    s = 0.0
    p = 1.0
    n = 0
    while n < MAX_TERMS:
        tn = p / (n + 1.0 + d)
        s += tn
        p *= -x
        n += 1
        if fabs(tn) < RTOL * fabs(s):
            out[0] = M_PI * d / sin(M_PI * d) * pow(v, d) + d * x * s
            return 0
    return 1


cdef int _hyp_h(double d, double v, double* out) noexcept nogil:
    cdef double s, x, p, tn
    cdef long n
    if v <= SWITCH:
        if _pfaff_sum(1.0, 2.0 - d, v / (1.0 + v), &s):
            return 1
        out[0] = d * v / (1.0 - d) * s / (1.0 + v)
        return 0
    x = 1.0 / v
    s = 0.0
    p = 1.0
    n = 0
    while n < MAX_TERMS:
        tn = p / (n + d)
        s += tn
        p *= -x
        n += 1
        if fabs(tn) < RTOL * fabs(s):
            out[0] = M_PI * d / sin(M_PI * d) * pow(v, d) - d * s
            return 0
    return 1


cdef int _hyp_fp(double d, double v, double* out) noexcept nogil:
    cdef double s, x, p, tn
    cdef long n
    if v <= SWITCH:
        if _pfaff_sum(2.0, 2.0 - d, v / (1.0 + v), &s):
            return 1
        out[0] = d / (1.0 - d) * s / ((1.0 + v) * (1.0 + v))
        return 0
    x = 1.0 / v
    s = 0.0
    p = 1.0
    n = 0
    while n < MAX_TERMS:
        tn = p * (n + 1.0) / (n + 1.0 + d)
        s += tn
        p *= -x
        n += 1
        if fabs(tn) < RTOL * fabs(s):
            out[0] = M_PI * d * d / sin(M_PI * d) * pow(v, d - 1.0) - d * x * x * s
            return 0
    return 1


def hyp_f(double d, double v):
    cdef double out
    if _hyp_f(d, v, &out):
        raise AccuracyError(f"2F1 series did not converge within {MAX_TERMS} terms (delta={d}, nu={v})")
    return out


def hyp_h(double d, double v):
    cdef double out
    if _hyp_h(d, v, &out):
        raise AccuracyError(f"2F1 series did not converge within {MAX_TERMS} terms (delta={d}, theta={v})")
    return out


def hyp_f_deriv(double d, double v):
    cdef double out
    if _hyp_fp(d, v, &out):
        raise AccuracyError(f"2F1 series did not converge within {MAX_TERMS} terms (delta={d}, nu={v})")
    return out


def _array_apply(int which, double d, const double[::1] v):
    cdef Py_ssize_t i, n = v.shape[0]
    res = np.empty(n, dtype=np.float64)
    cdef double[::1] r = res
    cdef int bad = 0
    with nogil:
        for i in range(n):
            if which == 0:
                bad = _hyp_f(d, v[i], &r[i])
            elif which == 1:
                bad = _hyp_h(d, v[i], &r[i])
            else:
                bad = _hyp_fp(d, v[i], &r[i])
            if bad:
                break
    if bad:
        raise AccuracyError(f"2F1 series did not converge within {MAX_TERMS} terms (delta={d})")
    return res


def hyp_f_array(double d, v):
    return _array_apply(0, d, np.ascontiguousarray(v, dtype=np.float64))


def hyp_h_array(double d, v):
    return _array_apply(1, d, np.ascontiguousarray(v, dtype=np.float64))


def hyp_f_deriv_array(double d, v):
    return _array_apply(2, d, np.ascontiguousarray(v, dtype=np.float64))


def interference_sums(counts, u, h, r2_in, r2_out, double alpha):
    """Per-trial sum of h * d**-alpha over ragged blocks of annulus points.

    Trial ``i`` owns ``counts[i]`` consecutive entries of ``u`` (uniform on
    [0, 1), mapped to squared distance on [r2_in[i], r2_out[i]]) and ``h``.
    """
    cdef const long long[::1] c = np.ascontiguousarray(counts, dtype=np.int64)
    cdef const double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] hh = np.ascontiguousarray(h, dtype=np.float64)
    cdef const double[::1] lo = np.ascontiguousarray(r2_in, dtype=np.float64)
    cdef const double[::1] hi = np.ascontiguousarray(r2_out, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0], i, j, k = 0
    res = np.empty(n, dtype=np.float64)
    cdef double[::1] out = res
    cdef double acc, d2, a, span, e = alpha / 2.0
    cdef int mode = 0
    if alpha == 4.0:
        mode = 1
    elif alpha == 3.0:
        mode = 2
    with nogil:
        for i in range(n):
            acc = 0.0
            a = lo[i]
            span = hi[i] - a
            for j in range(c[i]):
                d2 = a + uu[k] * span
                if mode == 1:
                    acc += hh[k] / (d2 * d2)
                elif mode == 2:
                    acc += hh[k] / (d2 * sqrt(d2))
                else:
                    acc += hh[k] * pow(d2, -e)
                k += 1
            out[i] = acc
    return res
