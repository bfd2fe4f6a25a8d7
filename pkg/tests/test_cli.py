import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from miacomp import analytic, cli
from miacomp.errors import QuadratureError


def run(argv):
    return cli.main(argv)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def by(rows, scenario, method):
    sel = [r for r in rows if r["scenario"] == scenario and r["method"] == method]
    return np.array([float(r["x"]) for r in sel]), np.array([float(r["value"]) for r in sel]), sel


def test_curve_schema_and_monotone(tmp_path):
    out = tmp_path / "c.csv"
    assert run(["curve", "--scenario", "gu-nc", "--method", "analytic", "--t-min", "50", "--t-max", "1000",
                "--t-points", "20", "--out", str(out)]) == 0
    with open(out) as fh:
        header = fh.readline().strip()
    assert header == "scenario,method,x,value,stderr,n_trials,alpha,lambda,kbits,seed"
    rows = read_rows(out)
    assert len(rows) == 20
    assert all(r["stderr"] == "" and r["n_trials"] == "" for r in rows)
    x, v, _ = by(rows, "gu-nc", "analytic")
    assert np.all(np.diff(v) <= 0)
    assert x[0] == 50 and x[-1] == 1000


def test_twelve_significant_digits(tmp_path):
    out = tmp_path / "c.csv"
    run(["curve", "--scenario", "gu-nc", "--t-min", "75", "--t-max", "100", "--t-points", "2", "--out", str(out)])
    row = read_rows(out)[0]
    assert row["value"] == f"{analytic.gu_nc_ccdf(analytic.NetworkParams(), 75.0):.12g}"
    assert len(row["value"].lstrip("0.").replace(".", "")) <= 12


def test_curve_both_respects_bound(tmp_path):
    out = tmp_path / "w.csv"
    assert run(["curve", "--scenario", "wu-mia", "--method", "both", "--t-min", "30", "--t-max", "1500",
                "--t-points", "10", "--trials", "20000", "--out", str(out)]) == 0
    rows = read_rows(out)
    _, a, _ = by(rows, "wu-mia", "analytic")
    _, m, sel = by(rows, "wu-mia", "mc")
    se = np.array([float(r["stderr"]) for r in sel])
    assert np.all(m + 3 * se >= a)
    assert all(r["n_trials"] == "20000" for r in sel)


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["curve", "--scenario", ""])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["curve", "--scenario", "xx-nc"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["curve", "--seed", str(2**64)])
    assert exc.value.code == 2
    assert cli.main(["curve", "--alpha", "2.0"]) == 2
    assert cli.main(["curve", "--t-min", "0"]) == 2
    assert cli.main(["curve", "--t-min", "100", "--t-max", "50"]) == 2
    assert cli.main(["curve", "--emit-plot"]) == 2


def test_numeric_failure_exit_code(monkeypatch, capsys):
    def boom(*a, **k):
        raise QuadratureError("did not converge", achieved=1.0)

    monkeypatch.setattr(analytic, "analytic_curve", boom)
    assert cli.main(["curve", "--scenario", "gu-nc"]) == 3
    assert "numeric failure" in capsys.readouterr().err


def test_figure_success_orderings(tmp_path):
    out = tmp_path / "s.csv"
    assert run(["figure-success", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert len(rows) == 4 * 60
    ps = {s: by(rows, s, "analytic")[1] for s in ("gu-nc", "gu-mia", "wu-nc", "wu-mia")}
    x = by(rows, "gu-nc", "analytic")[0]
    assert x[0] == pytest.approx(25) and x[-1] == pytest.approx(1500)
    assert np.all(ps["gu-mia"] >= ps["gu-nc"])
    assert np.all(ps["wu-mia"] >= ps["wu-nc"])
    assert np.all(ps["gu-nc"] >= ps["wu-nc"])


def test_single_point_grid(tmp_path):
    out = tmp_path / "s.csv"
    assert run(["figure-success", "--n-points", "1", "--n-min", "100", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert len(rows) == 4 and {r["x"] for r in rows} == {"100"}


def test_linear_spacing(tmp_path):
    out = tmp_path / "s.csv"
    run(["curve", "--scenario", "gu-nc", "--spacing", "lin", "--t-min", "10", "--t-max", "50", "--t-points", "5",
         "--out", str(out)])
    assert [r["x"] for r in read_rows(out)] == ["10", "20", "30", "40", "50"]


def test_figure_rate_summary(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert run(["figure-rate", "--out", str(out)]) == 0
    err = capsys.readouterr().err
    assert "g_r(general, analytic)" in err and "g_r(worst_case, analytic)" in err
    side = json.loads((tmp_path / "r.csv.json").read_text())
    gains = {g["user_class"]: g for g in side["rate_gain"]}
    assert gains["general"]["g_r"] == pytest.approx(2.6, rel=0.1)
    assert gains["worst_case"]["g_r"] == pytest.approx(6.12, rel=0.1)
    assert 25 < gains["general"]["nc_n_opt"] < 1500


def test_figure_rate_scaling(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(["figure-rate", "--scenario", "gu-nc,wu-mia", "--n-points", "10", "--out", str(a)])
    run(["figure-rate", "--scenario", "gu-nc,wu-mia", "--n-points", "10", "--kbits", "150", "--n-min", "50",
         "--n-max", "3000", "--out", str(b)])
    for s in ("gu-nc", "wu-mia"):
        np.testing.assert_allclose(by(read_rows(b), s, "analytic")[1], by(read_rows(a), s, "analytic")[1], rtol=1e-6)


def test_diversity_report(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert run(["diversity", "--out", str(out)]) == 0
    side = json.loads((tmp_path / "d.csv.json").read_text())
    fits = {f["scenario"]: f["g_d"] for f in side["diversity"]}
    assert fits["gu-nc"] == pytest.approx(1, abs=0.05)
    assert fits["wu-nc"] == pytest.approx(1, abs=0.05)
    assert fits["gu-mia"] == pytest.approx(2, abs=0.1)
    assert fits["wu-mia"] == pytest.approx(2, abs=0.15)
    assert "g_d(gu-mia)" in capsys.readouterr().err


def test_sidecar_records_resolved_config(tmp_path):
    out = tmp_path / "c.csv"
    run(["curve", "--scenario", "all", "--method", "mc", "--quick", "--alpha", "4", "--seed", "0x10",
         "--t-points", "3", "--out", str(out)])
    side = json.loads((tmp_path / "c.csv.json").read_text())
    assert side["trials"] == 1000 and side["seed"] == 16
    assert side["params"]["alpha"] == 4 and side["params"]["delta"] == 0.5
    assert side["scenarios"] == ["gu-nc", "gu-mia", "wu-nc", "wu-mia"]
    assert len(side["grid"]["values"]) == 3


def test_csv_identical_across_runs_and_plot_emission(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["figure-success", "--method", "both", "--quick", "--n-points", "8"]
    run(base + ["--out", str(a)])
    run(base + ["--out", str(b), "--emit-plot", "--workers", "2"])
    assert a.read_bytes() == b.read_bytes()
    script = tmp_path / "b_plot.py"
    assert script.exists() and "b.csv" in script.read_text()


def test_emitted_plot_script_runs(tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "r.csv"
    run(["figure-rate", "--n-points", "8", "--out", str(out), "--emit-plot"])
    subprocess.run([sys.executable, str(tmp_path / "r_plot.py")], check=True)
    assert (tmp_path / "r.png").stat().st_size > 0


def test_stdout_when_no_out(capsys):
    assert run(["curve", "--scenario", "wu-nc", "--t-points", "3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4 and lines[0].startswith("scenario,method")


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "miacomp", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "miacomp" in out.stdout
