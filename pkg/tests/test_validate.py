import numpy as np
import pytest

from miacomp import analytic, cli, validate
from miacomp.model import NetworkParams


def test_convolution_cdf_of_uniforms():
    u = lambda y: np.clip(y, 0.0, 1.0)
    # P(U1 + U2 <= y) = y^2/2 for y <= 1
    assert validate.convolution_cdf(u, u, 0.6) == pytest.approx(0.18, rel=1e-6)


def test_quick_suite_passes(tmp_path, capsys):
    out = tmp_path / "v.csv"
    assert cli.main(["validate", "--quick", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "FAIL" not in text
    lines = out.read_text().splitlines()
    assert lines[0] == "check,passed,value,limit,detail"
    assert len(lines) == len(validate.CHECKS) + 1


def test_doubled_prefactor_is_caught(monkeypatch, capsys):
    real = analytic._kappa
    monkeypatch.setattr(analytic, "_kappa", lambda d: 2.0 * real(d))
    assert cli.main(["validate", "--quick"]) == 1
    out = capsys.readouterr().out
    assert "[FAIL] asymptote-ratio" in out
    assert "FAILED: " in out and "asymptote-ratio" in out.splitlines()[-1]


def test_check_result_line():
    r = validate.CheckResult("x", False, 1.5, "<= 1", "more")
    assert r.line() == "[FAIL] x: 1.5 (<= 1) more"


def test_deterministic_checks_on_other_exponent():
    cfg = validate.ValidationConfig.quick(params=NetworkParams(alpha=4.0))
    for check in (validate.check_hyp_identity, validate.check_small_argument, validate.check_convolution_asymptote,
                  validate.check_bound_vs_convolution, validate.check_monotone, validate.check_dominance):
        assert check(cfg).passed, check.__name__
