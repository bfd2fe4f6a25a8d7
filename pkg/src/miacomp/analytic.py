"""Analytic packet-time CCDFs, success probability, rate and diversity.

The packet-time CCDF ``A_M(t) = P(T_hat > t)`` is available for the four
scenarios: exact for the no-cooperation (NC) users and an AM-GM lower bound
for mutual-information accumulation (MIA) with two codewords. Every CCDF is
independent of the BS density, since the SIR distributions are scale free.

Rates are ``R_N = K * p_s(N) / E[T]`` with ``E[T] = int_0^N A_M(t) dt``.
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

from . import specfun
from ._backend import kernels
from .errors import DomainError, EdgeMaximumWarning, QuadratureError, RegimeError
from .model import (
    GU_MIA,
    GU_NC,
    SCENARIOS,
    WU_MIA,
    WU_NC,
    CcdfCurve,
    Cooperation,
    NetworkParams,
    Scenario,
    UserClass,
)

__all__ = [
    "CcdfCurve",
    "NetworkParams",
    "Scenario",
    "SCENARIOS",
    "analytic_ccdf",
    "analytic_curve",
    "diversity_estimate",
    "diversity_gain",
    "g_ccdf",
    "g_ccdf_deriv",
    "gu_mia_ccdf_bound",
    "gu_nc_ccdf",
    "outage_asymptote",
    "rate",
    "rate_curve",
    "rate_gain",
    "success_prob",
    "wu_mia_ccdf_bound",
    "wu_nc_ccdf",
]

LOG2 = math.log(2.0)

# Below t = K/MAX_EXPONENT the CCDF is set to exactly 1: G(2**(K/t) - 1) < 1e-50 there.
MAX_EXPONENT = 500.0

BOUND_EPSABS = 1e-8
_QUAD_EPSABS = 1e-14
_QUAD_EPSREL = 1e-11
_QUAD_LIMIT = 200

RATE_EPSREL = 1e-6
LAGUERRE_NODES = 32


def _check_t(t):
    if not t > 0:
        raise DomainError(f"t must be positive, got {t!r}")


def sir_threshold(kbits, t):
    """SIR needed to push K bits through one codeword in t channel uses."""
    return math.expm1(kbits * LOG2 / t)


def mia_threshold(kbits, t):
    """Sum-SIR threshold ``2(2**(K/2t) - 1)`` of the AM-GM relaxation."""
    return 2.0 * math.expm1(kbits * LOG2 / (2.0 * t))


def g_ccdf(delta, nu):
    """P(SIR > nu) of the nearest-BS link in a Poisson field."""
    return 1.0 / specfun.hyp_f(delta, nu)


def g_ccdf_deriv(delta, nu):
    f = specfun.hyp_f(delta, nu)
    return -specfun.hyp_f_deriv(delta, nu) / (f * f)


def _quad(f, a, b, epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL):
    res = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=_QUAD_LIMIT, full_output=1)
    val, err = res[0], res[1]
    # QUADPACK flags roundoff even when the estimate is fine; only fail on a real miss
    if len(res) > 3 and err > 1e3 * max(epsabs, epsrel * abs(val)):
        raise QuadratureError(f"quadrature on [{a}, {b}] failed: {res[3]}", achieved=err)
    return val, err


def _fold_quad(integrand, gamma):
    """Integrate ``integrand(y, gamma - y)`` over y in [0, gamma].

    The range is split at gamma/2 and each half is integrated in the distance
    to its own endpoint, so both endpoint layers are resolved even when gamma
    is astronomically large. Past distance 1 the variable is logarithmic.
    Returns (value, abs_error_estimate).
    """
    half = 0.5 * gamma
    total = err = 0.0
    for side in (0, 1):
        if side == 0:
            g = lambda s: integrand(s, gamma - s)
        else:
            g = lambda s: integrand(gamma - s, s)
        near = min(half, 1.0)
        v, e = _quad(g, 0.0, near)
        total += v
        err += e
        if half > 1.0:
            v, e = _quad(lambda u: g(math.exp(u)) * math.exp(u), 0.0, math.log(half))
            total += v
            err += e
    if err > BOUND_EPSABS:
        raise QuadratureError(f"convolution bound error {err:.3g} exceeds {BOUND_EPSABS}", achieved=err)
    return total, err


def gu_nc_ccdf(params, t):
    """General user, no cooperation: ``1 - G(2**(K/t) - 1)``."""
    _check_t(t)
    if params.kbits / t > MAX_EXPONENT:
        return 1.0
    th = sir_threshold(params.kbits, t)
    d = params.delta
    # 1 - 1/F written as H/F to keep relative precision in the deep tail
    return kernels.hyp_h(d, th) / kernels.hyp_f(d, th)


def wu_nc_ccdf(params, t):
    """Worst-case user, no cooperation: ``1 - [G(theta)/(1+theta)]**2``."""
    _check_t(t)
    if params.kbits / t > MAX_EXPONENT:
        return 1.0
    th = sir_threshold(params.kbits, t)
    h = kernels.hyp_h(params.delta, th)
    # 1 - 1/q**2 with q = (1+theta)(1+H), in log form so huge theta cannot overflow
    return -math.expm1(-2.0 * (math.log1p(th) + math.log1p(h)))


def gu_mia_ccdf_bound(params, t):
    """General user with MIA: lower bound ``P(Y1 + Y2 <= gamma)``, Y_i i.i.d. with CCDF G."""
    _check_t(t)
    if params.kbits / t > MAX_EXPONENT:
        return 1.0
    d = params.delta
    hf, hh, hp = kernels.hyp_f, kernels.hyp_h, kernels.hyp_f_deriv

    def integrand(y, z):
        fy = hf(d, y)
        # CDF of Y1 at z times density of Y2 at y
        return hh(d, z) / hf(d, z) * hp(d, y) / (fy * fy)

    return _fold_quad(integrand, mia_threshold(params.kbits, t))[0]


def vertex_distance_moment(order, lam):
    """E[D**order] for the distance from a typical Voronoi vertex to its three BSs.

    ``pi*lam*D**2`` is Gamma(2, 1) distributed, so the moment is
    ``Gamma(2 + order/2) / (pi*lam)**(order/2)``.
    """
    return math.gamma(2.0 + order / 2.0) / (math.pi * lam) ** (order / 2.0)


def vertex_distance_pdf(r, lam):
    """Density of the vertex-to-BS distance, normalised to integrate to one."""
    r = np.asarray(r, dtype=np.float64)
    a = math.pi * lam
    return 2.0 * a * a * r**3 * np.exp(-a * r * r)


@lru_cache(maxsize=8)
def _laguerre(n):
    # weight s * exp(-s), the law of pi*lam*D**2
    return special.roots_genlaguerre(n, 1.0)


def _wu_mia_closed(d, gamma):
    hh, hp = kernels.hyp_h, kernels.hyp_f_deriv

    def integrand(y, z):
        # Gamma(2) average over s of P(Y1 <= z | s) * density of Y2 at y given s
        a = 0.5 * hh(d, z)
        b = 0.5 * hh(d, y)
        p = 1.0 + b
        q = p + a
        num = z * q**3 + a * (q * q + q * p + p * p)
        return hp(d, y) * num / ((1.0 + z) * p**3 * q**3)

    return _fold_quad(integrand, gamma)[0]


def _wu_mia_laguerre(params, gamma, nodes):
    d = params.delta
    lam = params.lam
    hh, hp = kernels.hyp_h, kernels.hyp_f_deriv
    s_nodes, weights = _laguerre(nodes)
    total = 0.0
    for s, w in zip(s_nodes, weights):
        r = math.sqrt(s / (math.pi * lam))
        c = math.pi * (lam / 2.0) * r * r

        def integrand(y, z, c=c):
            cdf1 = (z - math.expm1(-c * hh(d, z))) / (1.0 + z)
            return cdf1 * c * hp(d, y) * math.exp(-c * hh(d, y))

        total += w * _fold_quad(integrand, gamma)[0]
    return total


def wu_mia_ccdf_bound(params, t, r_integration="closed", nodes=LAGUERRE_NODES):
    """Worst-case user with MIA: AM-GM lower bound averaged over the vertex distance.

    Conditioned on the vertex distance r, the two codeword SIRs are
    independent with CCDFs ``U(y) = G~(y)/(1+y)`` and ``G~(y)``, where
    ``G~(y) = exp(-pi*(lam/2)*r**2*H(y))``. The r-average is done either in
    closed form (``"closed"``: the Gamma(2) Laplace transform of the
    integrand) or with generalized Gauss-Laguerre nodes over ``s = pi*lam*r**2``
    (``"laguerre"``).
    """
    _check_t(t)
    if params.kbits / t > MAX_EXPONENT:
        return 1.0
    gamma = mia_threshold(params.kbits, t)
    if r_integration == "closed":
        return _wu_mia_closed(params.delta, gamma)
    if r_integration == "laguerre":
        return _wu_mia_laguerre(params, gamma, nodes)
    raise ValueError(f"unknown r_integration {r_integration!r}")


_CCDFS = {
    GU_NC: gu_nc_ccdf,
    GU_MIA: gu_mia_ccdf_bound,
    WU_NC: wu_nc_ccdf,
    WU_MIA: wu_mia_ccdf_bound,
}


def analytic_ccdf(scenario, params):
    """Memoised callable ``t -> A_M(t)`` for a scenario (exact for NC, bound for MIA)."""
    fn = _CCDFS[scenario]

    @lru_cache(maxsize=65536)
    def ccdf(t):
        return fn(params, t)

    return ccdf


def analytic_curve(scenario, params, t_grid):
    ccdf = analytic_ccdf(scenario, params)
    values = np.array([ccdf(float(t)) for t in np.asarray(t_grid, dtype=np.float64)])
    method = "exact" if scenario.cooperation is Cooperation.NC else "lower_bound"
    return CcdfCurve(np.asarray(t_grid, dtype=np.float64), values, method, scenario=scenario)


def success_prob(ccdf, n):
    """p_s(N) = 1 - A_M(N)."""
    _check_t(n)
    return 1.0 - ccdf(n)


def expected_time(ccdf, params, n, start=None):
    """E[T] = int_0^N A_M(t) dt for the truncated packet time T = min(N, T_hat).

    ``start=(a, value)`` resumes from a known partial integral up to ``a <= n``.
    """
    if start is None:
        t0 = params.kbits / MAX_EXPONENT
        if n <= t0:
            return n
        start = (t0, t0)
    a, base = start
    if n <= a:
        return base
    val, err = _quad(ccdf, a, n, epsabs=0.0, epsrel=RATE_EPSREL * 1e-2)
    if err > RATE_EPSREL * abs(val):
        raise QuadratureError(f"E[T] integral relative error {err / val:.3g}", achieved=err)
    return base + val


def rate(ccdf, params, n):
    """R_N = K * p_s(N) / E[T] in bits per channel use."""
    ps = success_prob(ccdf, n)
    if ps <= 0.0:
        return 0.0
    return params.kbits * ps / expected_time(ccdf, params, n)


def rate_curve(ccdf, params, n_grid):
    """Rates and E[T] on an increasing N grid, integrating segment by segment."""
    n_grid = np.asarray(n_grid, dtype=np.float64)
    if np.any(np.diff(n_grid) <= 0):
        raise ValueError("N grid must be strictly increasing")
    times = np.empty_like(n_grid)
    start = None
    for i, n in enumerate(n_grid):
        times[i] = expected_time(ccdf, params, float(n), start)
        start = (float(n), float(times[i]))
    ps = np.array([success_prob(ccdf, float(n)) for n in n_grid])
    return params.kbits * ps / times, times


def default_n_grid(params, points=200):
    return np.geomspace(params.kbits / 20.0, 20.0 * params.kbits, points)


@dataclass(frozen=True)
class RateMax:
    n_opt: float
    rate: float
    at_edge: bool


@dataclass(frozen=True)
class RateGain:
    gain: float
    nc: RateMax
    mia: RateMax

    def __float__(self):
        return self.gain


def max_rate(ccdf, params, n_grid=None):
    """Maximise R_N: best grid point, then golden-section refinement between its neighbours."""
    if n_grid is None:
        n_grid = default_n_grid(params)
    n_grid = np.asarray(n_grid, dtype=np.float64)
    rates, times = rate_curve(ccdf, params, n_grid)
    i = int(np.argmax(rates))
    if i == 0 or i == len(n_grid) - 1:
        warnings.warn(f"rate maximum at grid edge N={n_grid[i]:.6g}", EdgeMaximumWarning, stacklevel=2)
        return RateMax(float(n_grid[i]), float(rates[i]), True)

    def neg_rate(n):
        j = int(np.searchsorted(n_grid, n, side="right")) - 1
        et = expected_time(ccdf, params, n, (float(n_grid[j]), float(times[j])))
        return -params.kbits * success_prob(ccdf, n) / et

    res = optimize.minimize_scalar(
        neg_rate,
        bracket=(n_grid[i - 1], n_grid[i], n_grid[i + 1]),
        method="golden",
        tol=1e-7,
    )
    n_opt, r_opt = float(res.x), float(-res.fun)
    if r_opt < rates[i]:
        n_opt, r_opt = float(n_grid[i]), float(rates[i])
    return RateMax(n_opt, r_opt, False)


def gain_from_ccdfs(nc_ccdf, mia_ccdf, params, n_grid=None):
    nc = max_rate(nc_ccdf, params, n_grid)
    mia = max_rate(mia_ccdf, params, n_grid)
    return RateGain(mia.rate / nc.rate, nc, mia)


def rate_gain(params, user_class, n_grid=None):
    """Ratio of the maximal MIA rate to the maximal NC rate, from the analytic curves."""
    user_class = UserClass(user_class)
    nc = Scenario(user_class, Cooperation.NC)
    mia = Scenario(user_class, Cooperation.MIA)
    return gain_from_ccdfs(analytic_ccdf(nc, params), analytic_ccdf(mia, params), params, n_grid)


def _kappa(delta):
    return delta / (1.0 - delta)


def outage_asymptote(params, scenario, n):
    """Leading-order outage ``A_M(N)`` as N grows.

    With ``x = K*ln2/N`` and ``kappa = delta/(1-delta)``:
    GU-NC ``kappa*x``, GU-MIA ``kappa**2*x**2/2``, WU-NC ``(2 + 2*kappa)*x``.
    For WU-MIA, given the vertex distance r, the two SIR CDFs near zero are
    ``(c+1)*y`` and ``c*y`` with ``c = pi*(lam/2)*r**2*kappa`` (the ``+1``
    is the co-channel vertex interferer), giving ``E[c*(c+1)]*x**2/2``.
    """
    _check_t(n)
    x = params.kbits * LOG2 / n
    k = _kappa(params.delta)
    if scenario == GU_NC:
        return k * x
    if scenario == GU_MIA:
        return 0.5 * k * k * x * x
    if scenario == WU_NC:
        return (2.0 + 2.0 * k) * x
    if scenario == WU_MIA:
        scale = math.pi * params.lam / 2.0 * k
        ec2 = scale * scale * vertex_distance_moment(4, params.lam)
        ec = scale * vertex_distance_moment(2, params.lam)
        return 0.5 * x * x * (ec2 + ec)
    raise ValueError(f"unknown scenario {scenario!r}")


def diversity_estimate(n_grid, ps=None, *, outage=None, max_outage=0.1):
    """Least-squares slope of log(1 - p_s) against -log N.

    Pass either success probabilities ``ps`` or the outage values directly
    (which avoids cancellation deep in the tail).
    """
    n_grid = np.asarray(n_grid, dtype=np.float64)
    if (ps is None) == (outage is None):
        raise ValueError("give exactly one of ps or outage")
    q = np.asarray(outage if outage is not None else 1.0 - np.asarray(ps, dtype=np.float64), dtype=np.float64)
    if n_grid.ndim != 1 or n_grid.size < 8 or q.shape != n_grid.shape:
        raise RegimeError("need at least 8 (N, p_s) pairs")
    if np.any(n_grid <= 0) or np.any(np.diff(n_grid) <= 0):
        raise ValueError("N grid must be positive and increasing")
    ratios = n_grid[1:] / n_grid[:-1]
    if not np.allclose(ratios, ratios[0], rtol=1e-6):
        raise ValueError("N grid must be log-spaced")
    if np.any(q >= max_outage):
        raise RegimeError(f"outage {q.max():.3g} >= {max_outage}: not in the asymptotic regime")
    if np.any(~np.isfinite(q)) or np.any(q <= 1e-300):
        raise RegimeError("outage underflows")
    slope = np.polyfit(-np.log(n_grid), np.log(q), 1)[0]
    return float(slope)


def outage_window(ccdf, params, lo=1e-6, hi=1e-1):
    """N range over which ``ccdf`` falls from ``hi`` to ``lo``."""

    def crossing(level):
        f = lambda logn: math.log(ccdf(math.exp(logn))) - math.log(level)
        a = math.log(params.kbits / 20.0)
        b = math.log(params.kbits * 1e9)
        return math.exp(optimize.brentq(f, a, b, xtol=1e-10))

    return crossing(hi), crossing(lo)


def diversity_gain(scenario, params, points=12, lo=1e-6, hi=1e-1):
    """Fit g_d on the analytic curve over the window where outage is in [lo, hi].

    Returns (g_d, n_grid used).
    """
    ccdf = analytic_ccdf(scenario, params)
    n_lo, n_hi = outage_window(ccdf, params, lo, hi)
    # shrink slightly so every point is strictly inside the window
    n_grid = np.geomspace(n_lo * 1.001, n_hi / 1.001, points)
    outage = np.array([ccdf(float(n)) for n in n_grid])
    return diversity_estimate(n_grid, outage=outage, max_outage=hi), n_grid
