"""Property suite behind ``miacomp validate``.

Each check returns a :class:`CheckResult` carrying the measured quantity and
the limit it was held to. Statistical checks compare against ``sigma``
standard errors; ``quick`` mode uses 1e3 trials and widens sigma to 5.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import analytic, montecarlo, specfun
from .model import GU_MIA, GU_NC, SCENARIOS, WU_MIA, WU_NC, NetworkParams

DEFAULT_TRIALS = 100_000
SIR_TRIALS = 1_000_000
QUICK_TRIALS = 1_000
FIGURE_GRID = np.geomspace(50.0, 1200.0, 12)
MAX_BOUND_GAP = 0.05


@dataclass
class ValidationConfig:
    params: NetworkParams = field(default_factory=NetworkParams)
    trials: int = DEFAULT_TRIALS
    sir_trials: int = SIR_TRIALS
    sigma: float = 3.0
    seed: int = 20170601
    workers: int = 1
    quick: bool = False

    @classmethod
    def quick(cls, **kw):
        kw.setdefault("trials", QUICK_TRIALS)
        kw.setdefault("sir_trials", QUICK_TRIALS)
        kw.setdefault("sigma", 5.0)
        kw.setdefault("quick", True)
        return cls(**kw)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    limit: str
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.value:.6g} ({self.limit}) {self.detail}".rstrip()


def convolution_cdf(cdf_a, cdf_b, y, cells=10_000):
    """P(A + B <= y) for independent nonnegative A, B by discretising B into cells.

    Midpoint rule on the Stieltjes sum: sum_k P(B in cell k) * P(A <= y - mid_k).
    """
    edges = np.linspace(0.0, y, cells + 1)
    mass = np.diff(cdf_b(edges))
    mids = 0.5 * (edges[1:] + edges[:-1])
    return float(np.sum(mass * cdf_a(y - mids)))


def _sir_cdf(delta):
    return lambda y: 1.0 - 1.0 / specfun.hyp_f(delta, np.asarray(y, dtype=np.float64))


def check_hyp_identity(cfg):
    rng = np.random.default_rng(cfg.seed)
    deltas = rng.uniform(0.05, 0.95, 1000)
    thetas = rng.uniform(0.0, 1e4, 1000)
    worst = 0.0
    for d, th in zip(deltas, thetas):
        f = specfun.hyp_f(d, th)
        worst = max(worst, abs(1.0 + specfun.hyp_h(d, th) - f) / f)
    return CheckResult("hyp-identity", worst <= 1e-10, worst, "max rel residual <= 1e-10")


def check_hyp_closed_form(cfg):
    nus = np.array([0.01, 0.1, 1.0, 10.0, 100.0, 1e4])
    exact = 1.0 + np.sqrt(nus) * np.arctan(np.sqrt(nus))
    err = float(np.max(np.abs(specfun.hyp_f(0.5, nus) - exact) / exact))
    return CheckResult("hyp-closed-form", err <= 1e-10, err, "delta=1/2 rel error <= 1e-10")


def check_hyp_derivative(cfg):
    worst = 0.0
    for d in (0.3, 0.5, 2.0 / 3.0, 0.8):
        for nu in np.geomspace(1e-3, 1e5, 25):
            step = 1e-6 * max(1.0, nu)
            fd = (specfun.hyp_f(d, nu + step) - specfun.hyp_f(d, nu - step)) / (2 * step) if nu > step else (
                specfun.hyp_f(d, nu + step) - specfun.hyp_f(d, nu)
            ) / step
            der = specfun.hyp_f_deriv(d, nu)
            worst = max(worst, abs(der - fd) / der)
    return CheckResult("hyp-derivative", worst <= 1e-5, worst, "rel error vs finite difference <= 1e-5")


def check_small_argument(cfg):
    d = cfg.params.delta
    g = analytic.g_ccdf(d, 1e-4)
    ratio = (1.0 - g) / (1e-4 * d / (1.0 - d))
    return CheckResult("cdf-small-y", abs(ratio - 1.0) <= 0.01, ratio, "|ratio - 1| <= 0.01 at y=1e-4")


def check_asymptote_ratio(cfg):
    p = cfg.params
    ratios = {
        "gu-nc": (analytic.gu_nc_ccdf(p, 1e5) / analytic.outage_asymptote(p, GU_NC, 1e5), 0.02),
        "wu-nc": (analytic.wu_nc_ccdf(p, 1e5) / analytic.outage_asymptote(p, WU_NC, 1e5), 0.02),
        "gu-mia": (analytic.gu_mia_ccdf_bound(p, 1e4) / analytic.outage_asymptote(p, GU_MIA, 1e4), 0.05),
        "wu-mia": (analytic.wu_mia_ccdf_bound(p, 1e5) / analytic.outage_asymptote(p, WU_MIA, 1e5), 0.05),
    }
    worst = max(abs(r - 1.0) / tol for r, tol in ratios.values())
    detail = " ".join(f"{k}={r:.5f}" for k, (r, _) in ratios.items())
    return CheckResult("asymptote-ratio", worst <= 1.0, worst, "normalised |ratio-1|/tol <= 1", detail)


def check_convolution_asymptote(cfg):
    d = cfg.params.delta
    k = d / (1.0 - d)
    y = 1e-2
    cdf = _sir_cdf(d)
    ratio = convolution_cdf(cdf, cdf, y) / (k * k * y * y / 2.0)
    return CheckResult("convolution-asymptote", abs(ratio - 1.0) <= 0.03, ratio, "|ratio - 1| <= 0.03 at y=1e-2")


def check_bound_vs_convolution(cfg):
    p = cfg.params
    d = p.delta
    cdf = _sir_cdf(d)
    gamma = analytic.mia_threshold(p.kbits, 75.0)
    oracle = convolution_cdf(cdf, cdf, gamma)
    bound = analytic.gu_mia_ccdf_bound(p, 75.0)
    err = abs(bound - oracle)
    return CheckResult("bound-convolution", err <= 1e-6, err, "|quadrature - discretised convolution| <= 1e-6 at t=75")


def check_am_gm(cfg):
    rng = np.random.default_rng(cfg.seed + 1)
    y = rng.exponential(10.0, size=(10_000, 2))
    lhs = np.log2(1 + y[:, 0]) + np.log2(1 + y[:, 1])
    rhs = 2 * np.log2(1 + y.sum(axis=1) / 2)
    slack = float(np.max(lhs - rhs))
    return CheckResult("am-gm", slack <= 1e-12, slack, "max(lhs - rhs) <= 1e-12")


def check_monotone(cfg):
    p = cfg.params
    t = np.geomspace(5.0, 5000.0, 100)
    worst = 0.0
    for s in SCENARIOS:
        v = analytic.analytic_curve(s, p, t).values
        worst = max(worst, float(np.max(np.diff(v))), float(max(0.0, -v.min(), v.max() - 1.0)))
    return CheckResult("ccdf-monotone", worst <= 1e-12, worst, "max increase along t <= 1e-12")


def check_lambda_invariance(cfg):
    p = cfg.params
    worst = 0.0
    for t in (50.0, 150.0, 600.0):
        base = analytic.wu_mia_ccdf_bound(p, t, r_integration="laguerre")
        for lam in (0.25, 4.0):
            other = analytic.wu_mia_ccdf_bound(p.replace(lam=lam), t, r_integration="laguerre")
            worst = max(worst, abs(other - base))
        for s in (GU_NC, GU_MIA, WU_NC):
            vals = [analytic.analytic_ccdf(s, p.replace(lam=lam))(t) for lam in (0.25, 1.0, 4.0)]
            worst = max(worst, max(vals) - min(vals))
    return CheckResult("lambda-invariance", worst <= 1e-9, worst, "max change over lambda <= 1e-9")


def check_dominance(cfg):
    p = cfg.params
    t = np.geomspace(10.0, 5000.0, 50)
    gap = min(analytic.wu_nc_ccdf(p, x) - analytic.gu_nc_ccdf(p, x) for x in t)
    return CheckResult("worst-case-dominance", gap >= 0.0, gap, "min(wu_nc - gu_nc) >= 0")


def check_diversity(cfg):
    p = cfg.params
    want = {GU_NC: (1.0, 0.05), WU_NC: (1.0, 0.05), GU_MIA: (2.0, 0.15), WU_MIA: (2.0, 0.15)}
    fits = {s: analytic.diversity_gain(s, p)[0] for s in SCENARIOS}
    worst = max(abs(fits[s] - g) / tol for s, (g, tol) in want.items())
    detail = " ".join(f"{s}={fits[s]:.4f}" for s in SCENARIOS)
    return CheckResult("diversity-gain", worst <= 1.0, worst, "normalised |g_d - target|/tol <= 1", detail)


def check_rate_gain(cfg):
    p = cfg.params
    gen = analytic.rate_gain(p, "general").gain
    wor = analytic.rate_gain(p, "worst_case").gain
    worst = max(abs(gen / 2.6 - 1.0), abs(wor / 6.12 - 1.0))
    return CheckResult("rate-gain", worst <= 0.10, worst, "max rel deviation from 2.6 / 6.12 <= 0.10",
                       f"general={gen:.4f} worst={wor:.4f}")


def _trialsets(cfg):
    if not hasattr(cfg, "_trialsets"):
        cfg._trialsets = {
            s: montecarlo.TrialSet.simulate(s, cfg.params, cfg.trials, cfg.seed, cfg.workers) for s in SCENARIOS
        }
    return cfg._trialsets


def check_nc_oracle(cfg):
    p = cfg.params
    t = FIGURE_GRID
    worst = 0.0
    for s in (GU_NC, WU_NC):
        mc = _trialsets(cfg)[s].ccdf(t)
        exact = analytic.analytic_curve(s, p, t).values
        z = np.abs(mc.values - exact) / np.maximum(mc.stderr, 1.0 / cfg.trials)
        worst = max(worst, float(z.max()))
    return CheckResult("nc-oracle", worst <= cfg.sigma, worst, f"max |z| <= {cfg.sigma}")


def check_bound_direction(cfg):
    p = cfg.params
    t = FIGURE_GRID
    worst = -math.inf
    for s in (GU_MIA, WU_MIA):
        mc = _trialsets(cfg)[s].ccdf(t)
        bound = analytic.analytic_curve(s, p, t).values
        z = (bound - mc.values) / np.maximum(mc.stderr, 1.0 / cfg.trials)
        worst = max(worst, float(z.max()))
    return CheckResult("mia-bound-direction", worst <= cfg.sigma, worst, f"max (bound - mc)/se <= {cfg.sigma}")


def check_bound_gap(cfg):
    p = cfg.params
    worst = 0.0
    for s in (GU_MIA, WU_MIA):
        mc = _trialsets(cfg)[s].ccdf(FIGURE_GRID)
        bound = analytic.analytic_curve(s, p, FIGURE_GRID).values
        gap = np.abs(mc.values - bound)
        if cfg.quick:
            # small samples: allow the sampling noise on top of the fixed gap
            gap = gap - cfg.sigma * mc.stderr
        worst = max(worst, float(np.max(gap)))
    limit = f"max |mc - bound|{' - sigma*se' if cfg.quick else ''} <= {MAX_BOUND_GAP}"
    return CheckResult("mia-bound-gap", worst <= MAX_BOUND_GAP, worst, limit)


def check_nearest_sir(cfg):
    worst = 0.0
    details = []
    for alpha in (3.0, 4.0):
        p = cfg.params.replace(alpha=alpha)
        sirs = montecarlo.nearest_sir_samples(p, cfg.sir_trials, cfg.seed)
        for nu in (0.5, 1.0, 2.0):
            est = float(np.mean(sirs > nu))
            se = math.sqrt(est * (1 - est) / sirs.size)
            z = abs(est - analytic.g_ccdf(p.delta, nu)) / se
            worst = max(worst, z)
            details.append(f"a{alpha:g}/nu{nu:g}:z={z:.2f}")
    return CheckResult("nearest-sir", worst <= cfg.sigma, worst, f"max |z| <= {cfg.sigma}", " ".join(details))


def check_conditional_sirs(cfg):
    p = cfg.params
    r = 1.0
    y1, y2 = montecarlo.conditional_vertex_sirs(p, r, cfg.trials, cfg.seed)
    worst = 0.0
    for y in (0.5, 1.0, 2.0):
        g_tilde = math.exp(-math.pi * p.lam / 2.0 * r * r * specfun.hyp_h(p.delta, y))
        for sample, expected in ((y2, g_tilde), (y1, g_tilde / (1.0 + y))):
            est = float(np.mean(sample > y))
            se = math.sqrt(est * (1 - est) / sample.size)
            worst = max(worst, abs(est - expected) / se)
    return CheckResult("conditional-sirs", worst <= cfg.sigma, worst, f"max |z| <= {cfg.sigma}")


def check_vertex_distance(cfg):
    rng = montecarlo.trial_stream(cfg.seed, 99, 0)
    lam = cfg.params.lam
    d = montecarlo.sample_vertex_distance(cfg.params, rng, size=max(cfg.trials, 1000))
    a = math.pi * lam
    pvalue = stats.kstest(d, lambda r: 1.0 - (1.0 + a * r * r) * np.exp(-a * r * r)).pvalue
    return CheckResult("vertex-distance-ks", pvalue >= 0.01, pvalue, "KS p-value >= 0.01")


def check_expected_time(cfg):
    p = cfg.params
    n_max = 400.0
    worst = 0.0
    for s in (GU_NC, WU_NC):
        ts = _trialsets(cfg)[s]
        y = np.minimum(ts.decode_times, n_max)
        se = float(y.std() / math.sqrt(y.size))
        quad = analytic.expected_time(analytic.analytic_ccdf(s, p), p, n_max)
        worst = max(worst, abs(quad - y.mean()) / se)
    return CheckResult("expected-time", worst <= cfg.sigma, worst, f"max |z| <= {cfg.sigma}")


def check_truncation(cfg):
    p1, p2, se = montecarlo.truncation_sensitivity(cfg.params, cfg.trials, cfg.seed)
    z = abs(p1 - p2) / se
    return CheckResult("truncation-sensitivity", z < 1.0, z, "|change| < 1 SE when radius doubles")


def check_zero_interference(cfg):
    redrawn = sum(ts.redrawn for ts in _trialsets(cfg).values())
    return CheckResult("zero-interference", redrawn == 0, redrawn, "no trial resampled")


CHECKS = [
    check_hyp_identity,
    check_hyp_closed_form,
    check_hyp_derivative,
    check_small_argument,
    check_asymptote_ratio,
    check_convolution_asymptote,
    check_bound_vs_convolution,
    check_am_gm,
    check_monotone,
    check_lambda_invariance,
    check_dominance,
    check_diversity,
    check_rate_gain,
    check_nc_oracle,
    check_bound_direction,
    check_bound_gap,
    check_nearest_sir,
    check_conditional_sirs,
    check_vertex_distance,
    check_expected_time,
    check_truncation,
    check_zero_interference,
]


def run_validation(cfg=None, checks=None, echo=None):
    """Run every check; ``echo`` (e.g. print) receives one line per result."""
    cfg = cfg or ValidationConfig()
    results = []
    for check in checks or CHECKS:
        res = check(cfg)
        results.append(res)
        if echo is not None:
            echo(res.line())
    return results
