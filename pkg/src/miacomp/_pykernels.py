"""Pure-Python/NumPy versions of the compiled kernels in ``_kernels.pyx``.

Scalars go through plain ``math`` loops, arrays through masked NumPy loops
that iterate until every element has converged.
"""

import math

import numpy as np

from .errors import AccuracyError

SWITCH = 3.0
RTOL = 1e-15
MAX_TERMS = 1_000_000


def _cap_error(d, v):
    return AccuracyError(f"2F1 series did not converge within {MAX_TERMS} terms (delta={d}, nu={v})")


def _pfaff_sum(shift_num, shift_den, w):
    s = term = 1.0
    for n in range(MAX_TERMS):
        term *= (n + shift_num) / (n + shift_den) * w
        s += term
        if term < RTOL * s:
            return s
    return None


def _alt_sum(x, offset, weighted):
    # sum_n (n+1)**weighted * (-x)**n / (n + offset)
    s, p = 0.0, 1.0
    for n in range(MAX_TERMS):
        tn = p * ((n + 1.0) if weighted else 1.0) / (n + offset)
        s += tn
        p *= -x
        if abs(tn) < RTOL * abs(s):
            return s
    return None


def _reflect(d):
    return math.pi * d / math.sin(math.pi * d)


def hyp_f(d, v):
    if v <= SWITCH:
        s = _pfaff_sum(1.0, 1.0 - d, v / (1.0 + v))
        if s is None:
            raise _cap_error(d, v)
        return s / (1.0 + v)
    x = 1.0 / v
    s = _alt_sum(x, 1.0 + d, False)
    if s is None:
        raise _cap_error(d, v)
    return _reflect(d) * v**d + d * x * s


def hyp_h(d, v):
    if v <= SWITCH:
        s = _pfaff_sum(1.0, 2.0 - d, v / (1.0 + v))
        if s is None:
            raise _cap_error(d, v)
        return d * v / (1.0 - d) * s / (1.0 + v)
    s = _alt_sum(1.0 / v, d, False)
    if s is None:
        raise _cap_error(d, v)
    return _reflect(d) * v**d - d * s


def hyp_f_deriv(d, v):
    if v <= SWITCH:
        s = _pfaff_sum(2.0, 2.0 - d, v / (1.0 + v))
        if s is None:
            raise _cap_error(d, v)
        return d / (1.0 - d) * s / (1.0 + v) ** 2
    x = 1.0 / v
    s = _alt_sum(x, 1.0 + d, True)
    if s is None:
        raise _cap_error(d, v)
    return d * _reflect(d) * v ** (d - 1.0) - d * x * x * s


def _pfaff_sum_array(shift_num, shift_den, w):
    s = np.ones_like(w)
    term = np.ones_like(w)
    active = np.ones(w.shape, dtype=bool)
    for n in range(MAX_TERMS):
        if not active.any():
            return s
        term[active] *= (n + shift_num) / (n + shift_den) * w[active]
        s[active] += term[active]
        active &= ~(term < RTOL * s)
    return None


def _alt_sum_array(x, offset, weighted):
    s = np.zeros_like(x)
    p = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    for n in range(MAX_TERMS):
        if not active.any():
            return s
        tn = p[active] * ((n + 1.0) if weighted else 1.0) / (n + offset)
        s[active] += tn
        p[active] *= -x[active]
        done = np.abs(tn) < RTOL * np.abs(s[active])
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return None


def _array_apply(which, d, v):
    v = np.ascontiguousarray(v, dtype=np.float64)
    out = np.empty_like(v)
    small = v <= SWITCH
    vs = v[small]
    if vs.size:
        shifts = {0: (1.0, 1.0 - d), 1: (1.0, 2.0 - d), 2: (2.0, 2.0 - d)}[which]
        s = _pfaff_sum_array(*shifts, vs / (1.0 + vs))
        if s is None:
            raise _cap_error(d, "array")
        if which == 0:
            out[small] = s / (1.0 + vs)
        elif which == 1:
            out[small] = d * vs / (1.0 - d) * s / (1.0 + vs)
        else:
            out[small] = d / (1.0 - d) * s / (1.0 + vs) ** 2
    big = ~small
    vb = v[big]
    if vb.size:
        x = 1.0 / vb
        offset = d if which == 1 else 1.0 + d
        s = _alt_sum_array(x, offset, which == 2)
        if s is None:
            raise _cap_error(d, "array")
        if which == 0:
            out[big] = _reflect(d) * vb**d + d * x * s
        elif which == 1:
            out[big] = _reflect(d) * vb**d - d * s
        else:
            out[big] = d * _reflect(d) * vb ** (d - 1.0) - d * x * x * s
    return out


def hyp_f_array(d, v):
    return _array_apply(0, d, v)


def hyp_h_array(d, v):
    return _array_apply(1, d, v)


def hyp_f_deriv_array(d, v):
    return _array_apply(2, d, v)


def interference_sums(counts, u, h, r2_in, r2_out, alpha):
    counts = np.asarray(counts, dtype=np.int64)
    lo = np.repeat(np.asarray(r2_in, dtype=np.float64), counts)
    span = np.repeat(np.asarray(r2_out, dtype=np.float64), counts) - lo
    d2 = lo + np.asarray(u) * span
    owner = np.repeat(np.arange(counts.size), counts)
    return np.bincount(owner, weights=np.asarray(h) * d2 ** (-alpha / 2.0), minlength=counts.size)
