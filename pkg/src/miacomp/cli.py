"""Command-line runner: curves, figure data, diversity fits and the validation suite.

Every data-producing subcommand writes CSV rows with the fixed columns
``scenario, method, x, value, stderr, n_trials, alpha, lambda, kbits, seed``
and, when ``--out`` is given, a JSON sidecar with the resolved configuration.
"""

import argparse
import csv
import io
import json
import os
import sys
import warnings

import numpy as np

from . import __version__, analytic, validate
from ._backend import BACKEND
from .errors import AccuracyError, DomainError, EdgeMaximumWarning, QuadratureError, RegimeError
from .model import SCENARIOS, Cooperation, NetworkParams, Scenario, UserClass
from .montecarlo import TrialSet

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

COLUMNS = ("scenario", "method", "x", "value", "stderr", "n_trials", "alpha", "lambda", "kbits", "seed")
DEFAULT_TRIALS = 100_000
QUICK_TRIALS = 1_000
DEFAULT_SEED = 20170601
FIGURE_RANGE = (25.0, 1500.0, 60)
CURVE_RANGE = (10.0, 2000.0, 50)


class UsageError(Exception):
    pass


def fmt(v):
    return f"{v:.12g}"


def parse_scenarios(text):
    names = [s.strip() for s in text.split(",") if s.strip()]
    if not names:
        raise argparse.ArgumentTypeError("empty scenario list")
    out = []
    for name in names:
        if name == "all":
            out.extend(s for s in SCENARIOS if s not in out)
            continue
        try:
            sc = Scenario.from_name(name)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
        if sc not in out:
            out.append(sc)
    return out


def seed_type(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _common_parser():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--alpha", type=float, default=3.0, help="path-loss exponent (default 3)")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="BS density (default 1)")
    p.add_argument("--kbits", type=float, default=75.0, help="packet size in bits (default 75)")
    p.add_argument("--trials", type=positive_int, default=None, help=f"Monte Carlo trials (default {DEFAULT_TRIALS})")
    p.add_argument("--seed", type=seed_type, default=DEFAULT_SEED)
    p.add_argument("--workers", type=positive_int, default=1, help="worker processes for Monte Carlo")
    p.add_argument("--out", default=None, help="output CSV path (default: stdout, no sidecar)")
    p.add_argument("--quick", action="store_true", help=f"use {QUICK_TRIALS} trials")
    return p


def _grid_args(p, defaults):
    lo, hi, pts = defaults
    p.add_argument("--t-min", "--n-min", dest="x_min", type=float, default=lo)
    p.add_argument("--t-max", "--n-max", dest="x_max", type=float, default=hi)
    p.add_argument("--t-points", "--n-points", dest="x_points", type=positive_int, default=pts)
    p.add_argument("--spacing", choices=("lin", "log"), default="log")


def _data_args(p, method_default="analytic", scenario_default="all"):
    p.add_argument("--scenario", type=parse_scenarios, default=parse_scenarios(scenario_default),
                   help="gu-nc|gu-mia|wu-nc|wu-mia|all, comma separated")
    p.add_argument("--method", choices=("analytic", "mc", "both"), default=method_default)
    p.add_argument("--emit-plot", action="store_true", help="write a matplotlib script next to the CSV")


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="miacomp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curve", parents=[common], help="packet-time CCDF P(T_hat > t)")
    _data_args(p)
    _grid_args(p, CURVE_RANGE)

    p = sub.add_parser("figure-success", parents=[common], help="success probability p_s(N)")
    _data_args(p)
    _grid_args(p, FIGURE_RANGE)

    p = sub.add_parser("figure-rate", parents=[common], help="rate R_N and rate gains")
    _data_args(p)
    _grid_args(p, FIGURE_RANGE)

    p = sub.add_parser("diversity", parents=[common], help="fitted diversity gain per scenario")
    p.add_argument("--scenario", type=parse_scenarios, default=parse_scenarios("all"))
    p.add_argument("--t-points", "--n-points", dest="x_points", type=positive_int, default=12)
    p.add_argument("--outage-min", type=float, default=1e-6)
    p.add_argument("--outage-max", type=float, default=1e-1)

    p = sub.add_parser("validate", parents=[common], help="run the property suite")
    return parser


def resolve_params(args):
    try:
        return NetworkParams(lam=args.lam, alpha=args.alpha, kbits=args.kbits)
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def resolve_trials(args):
    if args.trials is not None:
        return args.trials
    return QUICK_TRIALS if args.quick else DEFAULT_TRIALS


def resolve_grid(args):
    lo, hi, pts = args.x_min, args.x_max, args.x_points
    if not lo > 0:
        raise UsageError("grid minimum must be positive")
    if pts == 1:
        return np.array([lo])
    if not hi > lo:
        raise UsageError("grid maximum must exceed the minimum")
    if args.spacing == "log":
        return np.geomspace(lo, hi, pts)
    return np.linspace(lo, hi, pts)


class Rows:
    """Accumulates CSV rows in the fixed schema."""

    def __init__(self, params, seed):
        self.params = params
        self.seed = seed
        self.rows = []

    def add(self, scenario, method, x, value, stderr=None, n_trials=None):
        p = self.params
        self.rows.append([
            str(scenario), method, fmt(x), fmt(value),
            "" if stderr is None else fmt(stderr),
            "" if n_trials is None else str(n_trials),
            fmt(p.alpha), fmt(p.lam), fmt(p.kbits), str(self.seed),
        ])

    def text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        w.writerows(self.rows)
        return buf.getvalue()


def _methods(method):
    return ("analytic", "mc") if method == "both" else (method,)


def _simulate(scenarios, params, trials, args):
    return {s: TrialSet.simulate(s, params, trials, args.seed, args.workers) for s in scenarios}


def run_curve(args, params, rows, summary, transform=None):
    grid = resolve_grid(args)
    trials = resolve_trials(args)
    methods = _methods(args.method)
    sims = _simulate(args.scenario, params, trials, args) if "mc" in methods else {}
    for s in args.scenario:
        if "analytic" in methods:
            values = analytic.analytic_curve(s, params, grid).values
            for x, v in zip(grid, values):
                rows.add(s, "analytic", x, v if transform is None else transform(v))
        if "mc" in methods:
            mc = sims[s].ccdf(grid)
            for x, v, se in zip(grid, mc.values, mc.stderr):
                rows.add(s, "mc", x, v if transform is None else transform(v), se, trials)
    return {"grid": grid, "trials": trials if sims else None}


def run_figure_success(args, params, rows, summary):
    return run_curve(args, params, rows, summary, transform=lambda a: 1.0 - a)


def run_figure_rate(args, params, rows, summary):
    grid = resolve_grid(args)
    trials = resolve_trials(args)
    methods = _methods(args.method)
    sims = _simulate(args.scenario, params, trials, args) if "mc" in methods else {}
    maxima = {}
    for s in args.scenario:
        if "analytic" in methods:
            rates, _ = analytic.rate_curve(analytic.analytic_ccdf(s, params), params, grid)
            for x, v in zip(grid, rates):
                rows.add(s, "analytic", x, v)
            if grid.size >= 3:
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always", EdgeMaximumWarning)
                    best = analytic.max_rate(analytic.analytic_ccdf(s, params), params, grid)
                for w in caught:
                    print(f"warning: {s} analytic: {w.message}", file=sys.stderr)
                maxima[(s, "analytic")] = (best.n_opt, best.rate, best.at_edge)
        if "mc" in methods:
            ts = sims[s]
            rates = ts.rate_curve(grid)
            for x in grid:
                _, r = ts.ps_rate(float(x))
                rows.add(s, "mc", x, r.mean, r.stderr, trials)
            if grid.size >= 3:
                n_opt, r_opt = ts.max_rate(grid)
                at_edge = n_opt in (grid[0], grid[-1]) and int(np.argmax(rates)) in (0, grid.size - 1)
                if at_edge:
                    print(f"warning: {s} mc: rate maximum at grid edge N={n_opt:.6g}", file=sys.stderr)
                maxima[(s, "mc")] = (n_opt, r_opt, bool(at_edge))
    gains = []
    for user in UserClass:
        nc = Scenario(user, Cooperation.NC)
        mia = Scenario(user, Cooperation.MIA)
        for m in methods:
            if (nc, m) in maxima and (mia, m) in maxima:
                a, b = maxima[(nc, m)], maxima[(mia, m)]
                gains.append({
                    "user_class": user.value, "method": m, "g_r": b[1] / a[1],
                    "nc_n_opt": a[0], "nc_rate": a[1], "mia_n_opt": b[0], "mia_rate": b[1],
                    "edge_maximum": a[2] or b[2],
                })
    summary["rate_maxima"] = [
        {"scenario": str(s), "method": m, "n_opt": v[0], "rate": v[1], "edge_maximum": v[2]}
        for (s, m), v in maxima.items()
    ]
    summary["rate_gain"] = gains
    for g in gains:
        print(
            f"g_r({g['user_class']}, {g['method']}) = {g['g_r']:.4f}  "
            f"[NC max {g['nc_rate']:.5g} at N={g['nc_n_opt']:.5g}; MIA max {g['mia_rate']:.5g} at N={g['mia_n_opt']:.5g}]",
            file=sys.stderr,
        )
    return {"grid": grid, "trials": trials if sims else None}


def run_diversity(args, params, rows, summary):
    if not 0 < args.outage_min < args.outage_max < 1:
        raise UsageError("need 0 < outage-min < outage-max < 1")
    fits = []
    for s in args.scenario:
        g, grid = analytic.diversity_gain(s, params, args.x_points, args.outage_min, args.outage_max)
        ccdf = analytic.analytic_ccdf(s, params)
        for x in grid:
            rows.add(s, "analytic", x, ccdf(float(x)))
        fits.append({"scenario": str(s), "g_d": g, "n_min": float(grid[0]), "n_max": float(grid[-1])})
        print(f"g_d({s}) = {g:.4f}  over N in [{grid[0]:.5g}, {grid[-1]:.5g}]", file=sys.stderr)
    summary["diversity"] = fits
    return {"grid": None, "trials": None}


def run_validate(args, params):
    trials = args.trials
    if args.quick:
        cfg = validate.ValidationConfig.quick(params=params, seed=args.seed, workers=args.workers,
                                              **({"trials": trials} if trials else {}))
    else:
        cfg = validate.ValidationConfig(params=params, seed=args.seed, workers=args.workers,
                                        **({"trials": trials} if trials else {}))
    results = validate.run_validation(cfg, echo=print)
    failed = [r.name for r in results if not r.passed]
    if args.out:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("check", "passed", "value", "limit", "detail"))
        for r in results:
            w.writerow((r.name, "1" if r.passed else "0", fmt(float(r.value)), r.limit, r.detail))
        _write(args.out, buf.getvalue())
        sidecar = {
            "command": "validate", "version": __version__, "backend": BACKEND,
            "params": {"alpha": params.alpha, "lambda": params.lam, "kbits": params.kbits},
            "trials": cfg.trials, "sir_trials": cfg.sir_trials, "sigma": cfg.sigma,
            "seed": cfg.seed, "workers": cfg.workers, "quick": args.quick, "failed": failed,
        }
        _write(args.out + ".json", json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    if failed:
        print("FAILED: " + ", ".join(failed))
        return EXIT_VALIDATION
    print(f"all {len(results)} checks passed")
    return EXIT_OK


PLOT_TEMPLATE = '''"""Plot {csv_name}; regenerate the data with: {command}"""
import csv
import os
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
series = defaultdict(lambda: ([], []))
with open(os.path.join(here, {csv_name!r}), newline="") as fh:
    for row in csv.DictReader(fh):
        xs, ys = series[(row["scenario"], row["method"])]
        xs.append(float(row["x"]))
        ys.append(float(row["value"]))

fig, ax = plt.subplots(figsize=(6, 4))
for (scenario, method), (xs, ys) in sorted(series.items()):
    ax.plot(xs, ys, "-" if method == "analytic" else ":", label=f"{{scenario}} ({{method}})")
ax.set_xscale({xscale!r})
ax.set_xlabel({xlabel!r})
ax.set_ylabel({ylabel!r})
ax.grid(True, which="both", alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(here, {png_name!r}), dpi=150)
'''

PLOT_LABELS = {
    "curve": ("packet time t", "P(T_hat > t)"),
    "figure-success": ("delay constraint N", "success probability p_s(N)"),
    "figure-rate": ("delay constraint N", "rate R_N (bits per channel use)"),
    "diversity": ("delay constraint N", "outage 1 - p_s(N)"),
}


def emit_plot(out, command, spacing):
    stem, _ = os.path.splitext(out)
    script = stem + "_plot.py"
    xlabel, ylabel = PLOT_LABELS[command]
    text = PLOT_TEMPLATE.format(
        csv_name=os.path.basename(out),
        png_name=os.path.basename(stem) + ".png",
        command=f"miacomp {command}",
        xscale="log" if spacing == "log" else "linear",
        xlabel=xlabel,
        ylabel=ylabel,
    )
    _write(script, text)
    return script


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


RUNNERS = {
    "curve": run_curve,
    "figure-success": run_figure_success,
    "figure-rate": run_figure_rate,
    "diversity": run_diversity,
}


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [float(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(type(obj).__name__)


def run(args):
    params = resolve_params(args)
    if args.command == "validate":
        return run_validate(args, params)
    if getattr(args, "emit_plot", False) and not args.out:
        raise UsageError("--emit-plot needs --out")
    rows = Rows(params, args.seed)
    summary = {}
    info = RUNNERS[args.command](args, params, rows, summary)
    text = rows.text()
    if args.out is None:
        sys.stdout.write(text)
    else:
        _write(args.out, text)
        sidecar = {
            "command": args.command,
            "version": __version__,
            "backend": BACKEND,
            "scenarios": [str(s) for s in args.scenario],
            "method": getattr(args, "method", "analytic"),
            "params": {"alpha": params.alpha, "lambda": params.lam, "kbits": params.kbits, "delta": params.delta},
            "grid": None if info["grid"] is None else {
                "min": args.x_min, "max": args.x_max, "points": args.x_points,
                "spacing": args.spacing, "values": info["grid"],
            },
            "trials": info["trials"],
            "seed": args.seed,
            "workers": args.workers,
            "quick": args.quick,
            **summary,
        }
        _write(args.out + ".json", json.dumps(sidecar, indent=2, sort_keys=True, default=_jsonable) + "\n")
        if getattr(args, "emit_plot", False):
            emit_plot(args.out, args.command, getattr(args, "spacing", "log"))
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except (UsageError, DomainError) as exc:
        parser.print_usage(sys.stderr)
        print(f"miacomp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RegimeError as exc:
        print(f"miacomp: regime error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (AccuracyError, QuadratureError, ArithmeticError, FloatingPointError) as exc:
        print(f"miacomp: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
