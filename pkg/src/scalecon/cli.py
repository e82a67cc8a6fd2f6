"""Command-line front end.

Exit status: 0 success, 2 invalid input or parameters, 3 solver failure,
4 I/O error, 64 usage error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import calibration, firms, pareto, scenario, statics, steady, transition
from .errors import ScaleconError, SolverError
from .params import ModelParams, format_params, load_params, validate
from .series import ingest_series

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3
EXIT_IO = 4
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _schema(name: str, cols) -> str:
    return f"{name} columns: " + ", ".join(cols)


PARAMS_HELP = (
    "Parameter files hold 'key = value' lines for any of sigma, beta, delta, alpha, nu,\n"
    "mu, phi, kappa, theta ('#' starts a comment). --set key=value overrides are applied\n"
    "after the file and before validation. Numbers are printed with 17 significant digits."
)


def _add_common(p: argparse.ArgumentParser, params: bool = True, jobs: bool = False) -> None:
    if params:
        p.add_argument("--config", metavar="PATH", help="parameter file (key = value lines)")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override one parameter; repeatable")
    p.add_argument("--out", default="-", metavar="PATH", help="output path, '-' for stdout (default)")
    if jobs:
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="worker threads; output order never depends on it (default: all cores)")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    parser = _Parser(prog="scalecon", description="Pareto heterogeneous-firm model: steady states, "
                     "statics, transitions, calibration and annual scenarios.", epilog=PARAMS_HELP,
                     formatter_class=fmt)
    parser.add_argument("--version", action="version", version="scalecon 0.1.0")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("validate", help="check the model assumptions", formatter_class=fmt,
                       description="List every violated assumption; status 2 if any.",
                       epilog=PARAMS_HELP)
    _add_common(p)

    p = sub.add_parser("steady", help="solve the steady state", formatter_class=fmt,
                       description="One CSV row with the steady state.",
                       epilog=_schema("steady", steady.STEADY_COLUMNS) + "\n\n" + PARAMS_HELP)
    _add_common(p)
    p.add_argument("--method", choices=("closed", "numeric"), default="closed")

    p = sub.add_parser("sweep", help="TFP decomposition over a parameter grid", formatter_class=fmt,
                       description="Steady states over an inclusive grid of one parameter. Invalid\n"
                       "points stay in the table with valid=false.",
                       epilog=_schema("sweep", statics.SWEEP_COLUMNS) + "\n\n" + PARAMS_HELP)
    _add_common(p, jobs=True)
    p.add_argument("--axis", choices=statics.AXES, required=True)
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--n", type=int, default=25)
    p.add_argument("--log", action="store_true", help="geometric spacing (phi and kappa)")

    p = sub.add_parser("transition", help="perfect-foresight transition path", formatter_class=fmt,
                       description="Saddle path to the steady state of the configured parameters.\n"
                       "Start from --k0, from --k0-ratio times the new steady state, or from the\n"
                       "old steady state given by --from KEY=VALUE changes (a surprise permanent\n"
                       "change at t = 0).",
                       epilog=_schema("transition", ("t", "K", "C", "Y", "r", "w", "Abar", "TFP", "N", "J",
                                                     "euler_resid", "resource_resid"))
                       + "\nThe last row (t = T) has empty residual cells.\n\n" + PARAMS_HELP)
    _add_common(p)
    start = p.add_mutually_exclusive_group()
    start.add_argument("--k0", type=float)
    start.add_argument("--k0-ratio", type=float, default=None)
    start.add_argument("--from", dest="old", action="append", default=None, metavar="KEY=VALUE",
                       help="old parameter value; repeatable")
    p.add_argument("--T", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("firms", help="sampled firm cross-section", formatter_class=fmt,
                       description="Technology draws with global indices [start, start + n) of the\n"
                       "stream for --seed and each firm's steady-state policy. Any split of the\n"
                       "index range reproduces the same rows.",
                       epilog=_schema("firms", firms.FIRM_COLUMNS) + "\n\n" + PARAMS_HELP)
    _add_common(p)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--start", type=int, default=0)

    p = sub.add_parser("costcurves", help="firm cost curves at steady-state prices", formatter_class=fmt,
                       description="Average, marginal and scale-economies schedules over a log grid of\n"
                       "output around the firm's optimal output.",
                       epilog=_schema("costcurves", firms.COST_COLUMNS) + "\n\n" + PARAMS_HELP)
    _add_common(p)
    p.add_argument("--a-rel", type=float, default=1.0, help="technology relative to the cutoff")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--lo", type=float, default=0.01, help="grid start relative to optimal output")
    p.add_argument("--hi", type=float, default=100.0, help="grid end relative to optimal output")

    p = sub.add_parser("calibrate", help="overhead cost from the inactive share", formatter_class=fmt,
                       description="Without --series: solve phi for the target inactive share, print the\n"
                       "calibrated parameter file and diagnostics (stderr). With --series: the same\n"
                       "per year, with nu and mu from the series and optionally theta from n_over_l.",
                       epilog=_schema("series input", ("year", "nu", "mu", "n_over_l", "overhead_share",
                                                       "tfp_data_index"))
                       + " (year required)\n" + _schema("calibrated output", calibration.CALIBRATED_COLUMNS)
                       + "\n\n" + PARAMS_HELP)
    _add_common(p, jobs=True)
    p.add_argument("--target-j", type=float, default=calibration.TARGET_INACTIVE_SHARE)
    p.add_argument("--real-rate", type=float, default=calibration.TARGET_REAL_RATE)
    p.add_argument("--kappa-rule", choices=("fixed", "bound", "range"), default="fixed")
    p.add_argument("--series", metavar="CSV")
    p.add_argument("--theta-from-data", action="store_true")

    p = sub.add_parser("scenario", help="year-by-year steady-state exercises", formatter_class=fmt,
                       description="Run one or more scenario files. One file writes its result table;\n"
                       "several write a comparison table and an RMSE summary on stderr.\n"
                       "Scenario files hold 'key = value' lines: name, mode, input_series,\n"
                       "base_year, theta_from_data, set.<param>. Modes: " + ", ".join(scenario.MODES) + ".",
                       epilog=_schema("series input", ("year", "nu", "mu", "n_over_l", "overhead_share",
                                                       "tfp_data_index"))
                       + "\n" + _schema("result", scenario.RESULT_COLUMNS)
                       + "\ncomparison columns: year, <name>_index..., <name>_minus_<first>..., tfp_data_index")
    _add_common(p, params=False, jobs=True)
    p.add_argument("specs", nargs="*", metavar="SPEC", help="scenario file(s)")
    p.add_argument("--mode", choices=scenario.MODES, help="run a single mode without a file")
    p.add_argument("--series", metavar="CSV", help="input series (default: bundled synthetic)")
    p.add_argument("--base-year", type=int)
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    p = sub.add_parser("selftest", help="run the numerical oracle checks", formatter_class=fmt,
                       description="Gamma quadrature, numeric vs closed-form steady state, statics\n"
                       "finite differences, aggregation identities and the transition oracle.\n"
                       "Status 0 when every check passes, 3 otherwise.",
                       epilog="selftest columns: check, value, tolerance, status")
    _add_common(p, params=False)
    return parser


# helpers ----------------------------------------------------------------------

def _params(args) -> ModelParams:
    return load_params(args.config, args.overrides)


def _write(args, text: str) -> None:
    if args.out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(args.out).write_text(text, encoding="utf-8", newline="")


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _checked(params: ModelParams) -> ModelParams:
    report = validate(params)
    if not report.ok:
        raise _Invalid(report)
    return params


class _Invalid(Exception):
    def __init__(self, report):
        self.report = report


# subcommands -------------------------------------------------------------------

def cmd_validate(args) -> int:
    params = _params(args)
    report = validate(params)
    if report.ok:
        _write(args, "all assumptions hold\n")
        return EXIT_OK
    for v in report:
        _err(str(v))
    return EXIT_INVALID


def cmd_steady(args) -> int:
    params = _checked(_params(args))
    ss = steady.solve_closed_form(params) if args.method == "closed" else steady.solve_numeric(params)
    _write(args, steady.steady_csv([ss]))
    return EXIT_OK


def cmd_sweep(args) -> int:
    params = _params(args)
    values = statics.grid(args.lo, args.hi, args.n, log=args.log)
    table = statics.sweep(params, args.axis, values, jobs=args.jobs)
    for row in table.rows:
        if not row.valid:
            _err(f"{args.axis} = {row.axis_value!r}: {row.reason}")
    _write(args, table.to_csv())
    return EXIT_OK


def cmd_transition(args) -> int:
    params = _checked(_params(args))
    if args.k0 is not None:
        k0 = args.k0
    elif args.old:
        old = _checked(load_params(args.config, list(args.overrides) + list(args.old)))
        k0 = steady.solve_closed_form(old).K
    else:
        ratio = 0.9 if args.k0_ratio is None else args.k0_ratio
        k0 = ratio * steady.solve_closed_form(params).K
    path = transition.solve_transition(params, k0, T=args.T, tol=args.tol)
    _err(f"T = {path.T}, Newton iterations {path.iterations}, max residual {path.max_residual:.3e}")
    _write(args, path.to_csv())
    return EXIT_OK


def cmd_firms(args) -> int:
    params = _checked(_params(args))
    ss = steady.solve_closed_form(params)
    draws = pareto.sample_panel(args.n, args.seed, params, ss.Abar, start=args.start)
    panel = firms.firm_panel(draws.a, ss, params, j=draws.j)
    _write(args, panel.to_csv())
    return EXIT_OK


def cmd_costcurves(args) -> int:
    params = _checked(_params(args))
    ss = steady.solve_closed_form(params)
    a = args.a_rel * ss.Abar
    if a < ss.Abar:
        _err("note: technology below the cutoff; the firm would be inactive")
    ref = firms.firm_panel([max(a, ss.Abar)], ss, params).y[0]
    grid = firms.default_output_grid(ref, n=args.n, lo=args.lo, hi=args.hi)
    curves = firms.cost_curves(a, grid, ss.r, ss.w, params)
    _write(args, curves.to_csv())
    return EXIT_OK


def cmd_calibrate(args) -> int:
    params = _params(args)
    targets = calibration.CalibrationTargets(real_rate=args.real_rate, inactive_share=args.target_j)
    if args.series:
        series = ingest_series(args.series)
        years = calibration.calibrate_series(series, params, targets, theta_from_data=args.theta_from_data,
                                             kappa_rule=args.kappa_rule, jobs=args.jobs)
        for cy in years:
            for flag in cy.flags:
                _err(f"{cy.year}: {flag}")
        _write(args, calibration.calibrated_csv(years))
        return EXIT_OK
    report = calibration.calibrate(params, targets, kappa_rule=args.kappa_rule)
    for line in report.lines():
        _err(line)
    _write(args, format_params(report.params))
    return EXIT_OK


def cmd_scenario(args) -> int:
    overrides = {}
    for item in args.overrides:
        key, _, value = item.partition("=")
        overrides[key.strip()] = float(value)
    specs = [scenario.load_spec(s) for s in args.specs]
    if args.mode:
        specs.append(scenario.ScenarioSpec(name=args.mode, mode=args.mode, input_series=args.series,
                                           base_year=args.base_year))
    if not specs:
        raise UsageError("give at least one scenario file or --mode")
    for spec in specs:
        spec.overrides = {**spec.overrides, **overrides}
        if args.series and spec.input_series is None:
            spec.input_series = args.series
        if args.base_year is not None:
            spec.base_year = args.base_year
        spec.__post_init__()
    results = [scenario.run(spec, jobs=args.jobs) for spec in specs]
    if len(results) == 1:
        _write(args, results[0].to_csv())
        return EXIT_OK
    comp = scenario.compare(results)
    for line in comp.summary():
        _err(line)
    _write(args, comp.to_csv())
    return EXIT_OK


def selftest_checks() -> list[tuple[str, float, float]]:
    """(name, value, tolerance) rows; a check passes when value <= tolerance."""
    p = ModelParams()
    ss = steady.solve_closed_form(p)
    rows = []
    g_closed = pareto.gamma(p)
    g_quad = pareto.power_mean(0.0, p, method="quadrature")
    rows.append(("gamma closed vs quadrature (rel)", abs(g_quad / g_closed - 1.0), 1e-10))
    num = steady.solve_numeric(p)
    worst = max(abs(getattr(num, c) / getattr(ss, c) - 1.0) for c in steady.STEADY_COLUMNS
                if getattr(ss, c) != 0)
    rows.append(("steady numeric vs closed form (rel)", worst, 1e-8))
    rows.append(("steady residuals (max rel)", float(np.max(np.abs(steady.residuals(ss, p)))), 1e-12))
    for axis in ("phi", "kappa"):
        chk = statics.fd_check(p, axis)
        rows.append((f"d ln TFP / d ln {axis} analytic vs FD (rel)", chk.rel_error, 1e-6))
    agg = firms.aggregation_check(firms.quadrature_panel(ss.J, p), ss, p)
    rows.append(("aggregation identities, quadrature (max rel)", agg.max_error(), 1e-8))
    path = transition.solve_transition(p, 0.9 * ss.K)
    shot = transition.stitched_shooting(p, 0.9 * ss.K, T=path.T)
    gap = float(np.max(np.abs(shot.k_path / path.k_path - 1.0)))
    rows.append(("transition stacked Newton vs shooting (rel)", gap, 1e-6))
    rows.append(("transition max Euler residual", float(np.max(np.abs(path.euler_residuals))), 1e-8))
    return rows


def cmd_selftest(args) -> int:
    t0 = time.perf_counter()
    rows = selftest_checks()
    lines = ["check,value,tolerance,status"]
    ok = True
    for name, value, tol in rows:
        passed = math.isfinite(value) and value <= tol
        ok &= passed
        lines.append(f"{name},{value:.17g},{tol:g},{'pass' if passed else 'FAIL'}")
    _write(args, "\n".join(lines) + "\n")
    _err(f"{len(rows)} checks in {time.perf_counter() - t0:.2f} s")
    return EXIT_OK if ok else EXIT_SOLVER


COMMANDS = {
    "validate": cmd_validate,
    "steady": cmd_steady,
    "sweep": cmd_sweep,
    "transition": cmd_transition,
    "firms": cmd_firms,
    "costcurves": cmd_costcurves,
    "calibrate": cmd_calibrate,
    "scenario": cmd_scenario,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        _err(f"scalecon {args.command}: {exc}")
        return EXIT_USAGE
    except _Invalid as exc:
        for v in exc.report:
            _err(str(v))
        return EXIT_INVALID
    except SolverError as exc:
        _err(f"solver failure: {exc}")
        return EXIT_SOLVER
    except ScaleconError as exc:
        _err(f"invalid input: {exc}")
        return EXIT_INVALID
    except ValueError as exc:
        _err(f"invalid input: {exc}")
        return EXIT_INVALID
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
