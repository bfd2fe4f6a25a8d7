"""Gauss hypergeometric functions behind the SIR distributions.

Three families over nonpositive real arguments, with ``delta = 2/alpha``:

* ``hyp_f(delta, nu)``       = 2F1([1, -delta]; 1 - delta; -nu)
* ``hyp_h(delta, theta)``    = delta*theta/(1-delta) * 2F1([1, 1-delta]; 2-delta; -theta)
* ``hyp_f_deriv(delta, nu)`` = d/dnu hyp_f = delta/(1-delta) * 2F1([2, 1-delta]; 2-delta; -nu)

For ``nu <= 3`` each is summed after a Pfaff transformation to the argument
``nu/(1+nu)`` (all terms positive). Above that the large-argument connection
formula is used, which leaves a ``nu**delta`` term plus an alternating series
in ``-1/nu``. ``hyp_h`` uses its own series on both branches so that the
identity ``1 + hyp_h == hyp_f`` is a genuine check.

All functions accept a scalar or an array for the second argument.
"""

import numpy as np

from ._backend import kernels
from .errors import DomainError

DELTA_MIN = 0.01
DELTA_MAX = 0.99


def check_delta(delta):
    if not (DELTA_MIN < delta < DELTA_MAX):
        raise DomainError(f"delta={delta!r} outside supported range ({DELTA_MIN}, {DELTA_MAX})")


def _dispatch(scalar_fn, array_fn, delta, x, name):
    check_delta(delta)
    delta = float(delta)
    if np.ndim(x) == 0:
        x = float(x)
        if not x >= 0.0:
            raise DomainError(f"{name} must be nonnegative, got {x!r}")
        return scalar_fn(delta, x)
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(arr >= 0.0):
        raise DomainError(f"{name} must be nonnegative")
    return array_fn(delta, arr.ravel()).reshape(arr.shape)


def hyp_f(delta, nu):
    """2F1([1, -delta]; 1 - delta; -nu); equals 1 at nu=0 and grows like nu**delta."""
    return _dispatch(kernels.hyp_f, kernels.hyp_f_array, delta, nu, "nu")


def hyp_h(delta, theta):
    """delta*theta/(1-delta) * 2F1([1, 1-delta]; 2-delta; -theta), so that 1 + H = hyp_f."""
    return _dispatch(kernels.hyp_h, kernels.hyp_h_array, delta, theta, "theta")


def hyp_f_deriv(delta, nu):
    """Derivative of ``hyp_f`` with respect to nu; positive, equal to delta/(1-delta) at 0."""
    return _dispatch(kernels.hyp_f_deriv, kernels.hyp_f_deriv_array, delta, nu, "nu")
