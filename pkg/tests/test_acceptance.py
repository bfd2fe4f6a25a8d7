"""Acceptance suite: one verdict line per criterion, shown in the terminal summary.

Runs at the stated tolerances and default trial counts, so it takes a few
minutes on one core.
"""

import time

import numpy as np
import pytest

from miacomp import analytic, cli, specfun, validate
from miacomp.model import GU_MIA, GU_NC, SCENARIOS, WU_MIA, WU_NC, NetworkParams, UserClass

pytestmark = pytest.mark.slow

P = NetworkParams(lam=1.0, alpha=3.0, kbits=75.0)


@pytest.fixture(scope="module")
def cfg():
    return validate.ValidationConfig(params=P)


def test_rate_gain_reproduction(report, cfg):
    targets = {UserClass.GENERAL: 2.6, UserClass.WORST_CASE: 6.12}
    parts, ok = [], True
    for user, target in targets.items():
        g = analytic.rate_gain(P, user).gain
        ok &= abs(g / target - 1.0) <= 0.10
        parts.append(f"{user.value} analytic {g:.4f} (target {target})")
    # simulation route reported for reference on the shared 1e5-trial sets
    grid = np.geomspace(25.0, 1500.0, 60)
    sims = validate._trialsets(cfg)
    for user, (nc, mia) in {UserClass.GENERAL: (GU_NC, GU_MIA), UserClass.WORST_CASE: (WU_NC, WU_MIA)}.items():
        g_mc = sims[mia].max_rate(grid)[1] / sims[nc].max_rate(grid)[1]
        parts.append(f"{user.value} mc {g_mc:.4f}")
    report("1 rate gain within 10%", ok, "; ".join(parts))
    assert ok


def test_success_curves_against_simulation(report, cfg):
    direction = validate.check_bound_direction(cfg)
    gap = validate.check_bound_gap(cfg)
    oracle = validate.check_nc_oracle(cfg)
    ok = direction.passed and gap.passed and oracle.passed and cfg.trials == 100_000
    assert len(validate.FIGURE_GRID) == 12
    report("2 success curves vs simulation", ok,
           f"NC max|z|={oracle.value:.3f}; MIA max(bound-mc)/se={direction.value:.3f}; max gap={gap.value:.4f}")
    assert ok


def test_diversity_gains(report):
    want = {GU_NC: (1.0, 0.05), WU_NC: (1.0, 0.05), GU_MIA: (2.0, 0.15), WU_MIA: (2.0, 0.15)}
    fits = {s: analytic.diversity_gain(s, P, lo=1e-6, hi=1e-1)[0] for s in SCENARIOS}
    ok = all(abs(fits[s] - g) <= tol for s, (g, tol) in want.items())
    report("3 diversity gains", ok, " ".join(f"{s}={fits[s]:.4f}" for s in SCENARIOS))
    assert ok


def test_asymptote_ratios(report):
    r1 = analytic.gu_nc_ccdf(P, 1e5) / analytic.outage_asymptote(P, GU_NC, 1e5)
    r2 = analytic.wu_nc_ccdf(P, 1e5) / analytic.outage_asymptote(P, WU_NC, 1e5)
    r3 = analytic.gu_mia_ccdf_bound(P, 1e4) / analytic.outage_asymptote(P, GU_MIA, 1e4)
    ok = 0.98 <= r1 <= 1.02 and 0.98 <= r2 <= 1.02 and 0.95 <= r3 <= 1.05
    report("4 asymptote ratios", ok, f"gu-nc@1e5={r1:.5f} wu-nc@1e5={r2:.5f} gu-mia@1e4={r3:.5f}")
    assert ok


def test_special_functions(report):
    start = time.perf_counter()
    rng = np.random.default_rng(12345)
    d = rng.uniform(0.05, 0.95, 1000)
    th = 10.0 ** rng.uniform(-4, 6, 1000)
    resid = max(abs(1 + specfun.hyp_h(a, b) - specfun.hyp_f(a, b)) / specfun.hyp_f(a, b) for a, b in zip(d, th))
    nu = np.geomspace(1e-4, 1e6, 200)
    closed = float(np.max(np.abs(specfun.hyp_f(0.5, nu) / (1 + np.sqrt(nu) * np.arctan(np.sqrt(nu))) - 1)))
    deriv = validate.check_hyp_derivative(None).value
    elapsed = time.perf_counter() - start
    ok = resid <= 1e-10 and closed <= 1e-10 and deriv <= 1e-5 and elapsed < 1.0
    report("5 special functions", ok,
           f"identity {resid:.2e}, closed form {closed:.2e}, derivative {deriv:.2e}, {elapsed:.2f}s")
    assert ok


def test_oracle_equivalence(report, cfg):
    checks = [validate.check_nearest_sir(cfg), validate.check_conditional_sirs(cfg),
              validate.check_vertex_distance(cfg), validate.check_expected_time(cfg)]
    ok = all(c.passed for c in checks) and cfg.sir_trials == 1_000_000
    report("6 oracle equivalence", ok, "; ".join(f"{c.name}={c.value:.3g}" for c in checks))
    assert ok


def test_validate_determinism(report, tmp_path, capsys):
    a, b = tmp_path / "w1.csv", tmp_path / "w2.csv"
    code_a = cli.main(["validate", "--workers", "1", "--out", str(a)])
    code_b = cli.main(["validate", "--workers", "2", "--out", str(b)])
    capsys.readouterr()
    same = a.read_bytes() == b.read_bytes()
    ok = same and code_a == 0 and code_b == 0
    report("7 determinism across worker counts", ok, f"identical={same} exit codes {code_a}/{code_b}")
    assert ok
