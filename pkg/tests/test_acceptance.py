"""The thirteen acceptance criteria, each at its stated tolerance.

Every test records one pass/fail line, printed in the terminal summary.
"""
import math
import time

import numpy as np
import pytest
from scipy import optimize

from scalecon.calibration import inactive_share, kappa_to_overhead_ratio, phi_from_inactive_share
from scalecon.cli import main
from scalecon.firms import (
    aggregation_check,
    cost_curves,
    default_output_grid,
    firm_panel,
    firm_policy,
    overhead_labour_experiment,
    quadrature_panel,
)
from scalecon.params import ModelParams, kappa_max, sample_valid_params, validate
from scalecon.pareto import gamma, power_mean, power_mean_density_quadrature, sample_panel
from scalecon.scenario import ScenarioSpec, run
from scalecon.series import synthetic_series
from scalecon.statics import central_elasticity, dln_dkappa, dlnTFP_dlnphi, fd_check
from scalecon.steady import STEADY_COLUMNS, solve_closed_form, solve_numeric
from scalecon.transition import solve_transition, stitched_shooting


def _check(record, label, checks: dict, detail=""):
    """Record the criterion, then fail loudly on the first broken check."""
    record(label, all(checks.values()), detail)
    for name, ok in checks.items():
        assert ok, f"{label}: {name} ({detail})"


def _rel(a, b):
    return abs(a - b) / abs(b) if b != 0 else abs(a)


def test_criterion_01_closed_form_oracle(record_criterion):
    rng = np.random.default_rng(20240101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        p = sample_valid_params(rng)
        ss, num = solve_closed_form(p), solve_numeric(p)
        for c in STEADY_COLUMNS:
            worst = max(worst, _rel(getattr(num, c), getattr(ss, c)))
    elapsed = time.perf_counter() - t0
    _check(record_criterion, "1 closed form vs numeric steady state",
           {"fields within 1e-8": worst < 1e-8, "under 10 s": elapsed < 10.0},
           f"max rel {worst:.2e}, {elapsed:.2f} s")


def test_criterion_02_gamma_oracle(record_criterion):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(20):
        p = sample_valid_params(rng)
        worst = max(worst, _rel(power_mean_density_quadrature(1.0, p), gamma(p)),
                    _rel(power_mean(0.0, p, method="quadrature"), gamma(p)))
    g = gamma(ModelParams())
    _check(record_criterion, "2 Gamma closed form vs quadrature",
           {"20 points within 1e-10": worst < 1e-10, "benchmark 1.14140": round(g, 5) == 1.14140},
           f"max rel {worst:.2e}, Gamma {g:.6f}")


def test_criterion_03_overhead_cost_elasticity(record_criterion):
    rng = np.random.default_rng(3)
    worst = 0.0
    n = 0
    while n < 20:
        p = sample_valid_params(rng)
        if p.kappa > 0.9 * kappa_max(p):
            continue  # interior points only
        worst = max(worst, fd_check(p, "phi", rel_step=1e-5).rel_error)
        n += 1
    crs = dlnTFP_dlnphi(ModelParams(nu=1.0, alpha=0.25, theta=10.0)).total
    lo, hi = (dlnTFP_dlnphi(ModelParams(mu=m)).total for m in (1.21, 1.28))
    _check(record_criterion, "3 d ln TFP / d ln phi",
           {"FD within 1e-6": worst < 1e-6,
            "constant returns 0.115385": abs(crs - 0.75 / 6.5) < 1e-12 and round(crs, 6) == 0.115385,
            "same across mu": abs(lo - hi) < 1e-10},
           f"max rel {worst:.2e}, value {crs:.6f}")


def test_criterion_04_entry_cost_statics(record_criterion):
    p = ModelParams()
    fd = central_elasticity(p, "kappa", rel_step=1e-5)
    alloc, tech = dln_dkappa(p)
    _check(record_criterion, "4 entry cost statics",
           {"allocative exactly 0": alloc == 0.0 and abs(fd[1]) <= np.finfo(float).eps,
            "technical negative by FD": fd[2] < 0,
            "technical FD matches closed form": _rel(fd[2], tech) < 1e-6},
           f"FD d ln Omega {fd[1]:.1e}, d ln Ahat {fd[2]:.6f}")


def test_criterion_05_aggregation(record_criterion):
    t0 = time.perf_counter()
    p = ModelParams()
    ss = solve_closed_form(p)
    quad = aggregation_check(quadrature_panel(ss.J, p), ss, p)
    keys = ("capital", "labour", "output", "labour_share")
    quad_worst = max(abs(quad.as_dict()[k]) for k in keys)
    mc = aggregation_check(sample_panel(10 ** 6, 12345, p, ss.Abar), ss, p)
    within = mc.within(3.0)
    elapsed = time.perf_counter() - t0
    _check(record_criterion, "5 aggregation identities",
           {"quadrature within 1e-8": quad_worst < 1e-8,
            "Monte Carlo within 3 SE": all(within[k] for k in keys),
            "under 30 s": elapsed < 30.0},
           f"quadrature max rel {quad_worst:.1e}, {elapsed:.2f} s")


def test_criterion_06_scale_economies(record_criterion):
    p = ModelParams()
    ss = solve_closed_form(p)
    u = np.random.default_rng(6).random(1000)
    a = np.sort(ss.Abar * (1 - u) ** (-1 / p.theta))
    f = firm_panel(a, ss, p)
    identity = np.max(np.abs(f.s - p.mu * (1 - f.pi / f.py)) / f.s)
    at_cutoff = firm_policy(ss.Abar, ss, p).s
    distinct = np.diff(a) > 0
    _check(record_criterion, "6 scale economies schedule",
           {"all active": bool(f.active.all()),
            "strictly decreasing": bool(np.all(np.diff(f.s)[distinct] < 0)),
            "S(Abar) = mu": abs(at_cutoff - p.mu) < 1e-12,
            "S > nu": bool(np.all(f.s > p.nu)),
            "identity within 1e-10": identity < 1e-10},
           f"identity {identity:.1e}")


def test_criterion_07_total_labour_elasticity(record_criterion):
    small = overhead_labour_experiment(10.0, 9.0)
    large = overhead_labour_experiment(40.0, 9.0)
    _check(record_criterion, "7 overhead labour experiment",
           {"small firm +100%": abs(small["pct_change"] - 100.0) < 1e-9,
            "large firm +12.9%": round(large["pct_change"], 1) == 12.9},
           f"{small['pct_change']:.1f}% and {large['pct_change']:.2f}%")


def test_criterion_08_cost_curves(record_criterion):
    out = {}
    for nu in (0.95, 1.0, 1.04):
        p = ModelParams(nu=nu)
        ss = solve_closed_form(p)
        y0 = firm_policy(ss.Abar, ss, p).y
        out[nu] = (p, ss, cost_curves(ss.Abar, default_output_grid(y0, n=400, lo=1e-4, hi=1e4), ss.r, ss.w, p))
    p, ss, c = out[0.95]
    res = optimize.minimize_scalar(
        lambda ly: float(cost_curves(ss.Abar, [math.exp(ly)], ss.r, ss.w, p).atc[0]),
        bounds=(math.log(c.y[0]), math.log(c.y[-1])), method="bounded", options={"xatol": 1e-10})
    m = cost_curves(ss.Abar, [math.exp(res.x)], ss.r, ss.w, p)
    gap = abs(m.atc[0] - m.mc[0]) / m.atc[0]
    crs = out[1.0][2]
    irs = out[1.04][2]
    _check(record_criterion, "8 cost curve geometry",
           {"nu<1 ATC = MC at minimum": gap < 1e-6 and abs(m.s[0] - 1) < 1e-6,
            "nu=1 S > 1 and tends to 1": bool(np.all(crs.s > 1)) and crs.s[-1] - 1 < 1e-3
            and bool(np.all(np.diff(crs.s) < 0)),
            "nu>1 MC strictly decreasing": bool(np.all(np.diff(irs.mc) < 0))},
           f"|ATC-MC|/ATC {gap:.1e}")


def test_criterion_09_transition(record_criterion):
    p = ModelParams()
    ss = solve_closed_form(p)
    t0 = time.perf_counter()
    path = solve_transition(p, 0.9 * ss.K, T=200)
    elapsed = time.perf_counter() - t0
    shot = stitched_shooting(p, 0.9 * ss.K, T=path.T)
    gap = max(np.max(np.abs(shot.k_path / path.k_path - 1)), np.max(np.abs(shot.c_path / path.c_path - 1)))
    b = path.block
    drift = max(np.ptp(b.u) / b.u[0], np.ptp(b.N) / b.N[0], np.ptp(b.w / b.Y) / (b.w[0] / b.Y[0]))
    euler = float(np.max(np.abs(path.euler_residuals)))
    _check(record_criterion, "9 transition path",
           {"matches shooting to 1e-6": shot.certified == path.T and gap < 1e-6,
            "Euler residual < 1e-8": euler < 1e-8,
            "u, N, s_l constant to 1e-12": drift < 1e-12,
            "under 5 s": elapsed < 5.0},
           f"gap {gap:.1e}, Euler {euler:.1e}, {elapsed * 1e3:.1f} ms")


def test_criterion_10_calibration(record_criterion):
    p = ModelParams()
    cal = phi_from_inactive_share(0.10, p)
    km = kappa_max(cal.params)
    ratio = kappa_to_overhead_ratio(solve_closed_form(cal.params), cal.params).ratio
    phi_match = float(f"{cal.phi:.2g}") == 0.85
    kappa_match = float(f"{km:.2g}") == 0.017
    round_trip = abs(inactive_share(p.replace(phi=cal.phi)) - 0.10)
    label = "10 calibration"
    checks = {"kappa/(phi w) < 1": ratio < 1}
    if phi_match and kappa_match:
        detail = f"phi {cal.phi:.3g}, kappa_max {km:.3g}"
    else:
        # the benchmark inputs do not reproduce phi = 0.85 and kappa = 0.017; the
        # criterion's fallback is the round trip, with the discrepancy recorded
        checks["round trip within 1e-8"] = round_trip < 1e-8
        detail = (f"degraded form: phi {cal.phi:.4g} vs 0.85, kappa_max {km:.4g} vs 0.017; "
                  f"round trip {round_trip:.1e}, ratio {ratio:.3f}")
    _check(record_criterion, label, checks, detail)


def test_criterion_11_markup_counterfactual(record_criterion):
    series = synthetic_series()
    cf = run(ScenarioSpec("fixed_mu", "fixed_mu_counterfactual", overrides={"mu": 1.21}), series)
    both = run(ScenarioSpec("nu_mu", "vary_nu_mu"), series)
    assert cf.years[-1] == 2014
    p = cf.rows[-1].params
    setup = (p.mu, p.phi, p.theta) == (1.21, 0.135, 10.0) and both.rows[-1].params.mu == 1.28
    later = cf.years > cf.base_year
    _check(record_criterion, "11 markup counterfactual",
           {"setup": setup,
            "2014 index >= 1.20": cf.index[-1] >= 1.20,
            "rising markup strictly lower": bool(np.all(both.index[later] < cf.index[later]))
            and both.index[0] == cf.index[0]},
           f"2014 index {cf.index[-1]:.4f} vs {both.index[-1]:.4f}")


def test_criterion_12_overhead_cost_exercise(record_criterion):
    series = synthetic_series()
    only = run(ScenarioSpec("phi", "vary_phi_only", overrides={"nu": 1.02}), series)
    with_mu = run(ScenarioSpec("phi_mu", "vary_phi_mu", overrides={"nu": 1.02}), series)
    base = run(ScenarioSpec("baseline", "fixed_all_baseline", overrides={"nu": 1.02}), series)
    share_gap = float(np.max(np.abs(only.achieved_overhead_share() - series.column("overhead_share"))))
    _check(record_criterion, "12 overhead cost exercise",
           {"overhead share path monotone": bool(np.all(np.diff(series.column("overhead_share")) > 0)),
            "share matched": share_gap < 1e-8,
            "fixed mu rises monotonically": bool(np.all(np.diff(only.index) > 0)),
            "ends >= 1.05": only.index[-1] >= 1.05,
            "rising mu ends below baseline": with_mu.index[-1] < base.index[-1]},
           f"{only.index[-1]:.4f}, with mu {with_mu.index[-1]:.4f}, baseline {base.index[-1]:.4f}")


VIOLATIONS = [
    # nu above mu also makes theta*(mu - nu) negative, so both are reported
    (dict(nu=1.30), {("Assumption 1", "nu < mu"), ("Assumption 2", "theta*(mu - nu) > 1")}),
    (dict(nu=1.245), {("Assumption 1", "nu < mu"), ("Assumption 2", "theta*(mu - nu) > 1")}),
    (dict(alpha=0.8, nu=1.26, mu=1.4),
     {("Assumption 1", "nu < 1/alpha"), ("Assumption 2", "theta*(1 - alpha*nu) > 1")}),
    (dict(theta=4.0), {("Assumption 2", "theta*(mu - nu) > 1")}),
    (dict(nu=1.0, mu=1.25, theta=4.0), {("Assumption 2", "theta*(mu - nu) > 1")}),
    (dict(alpha=0.5, nu=1.9, mu=2.0, theta=20.0), {("Assumption 2", "theta*(1 - alpha*nu) > 1")}),
]


def _cli_bytes(capsys, argv):
    rc = main(argv)
    return rc, capsys.readouterr().out.encode()


def test_criterion_13_validation_and_determinism(record_criterion, capsys):
    caught = []
    for fields, expected in VIOLATIONS:
        report = validate(ModelParams(**fields))
        caught.append({(v.assumption, v.condition) for v in report} == expected)
    invocations = [
        ["steady"],
        ["sweep", "--axis", "nu", "--lo", "0.99", "--hi", "1.05", "--n", "9", "--jobs", "1"],
        ["transition", "--T", "200"],
        ["firms", "--n", "500", "--seed", "7"],
        ["scenario", "--mode", "vary_nu_mu", "--jobs", "1"],
    ]
    identical = []
    for argv in invocations:
        first, second = _cli_bytes(capsys, argv), _cli_bytes(capsys, argv)
        identical.append(first[0] == 0 and first == second)
    jobs_free = (_cli_bytes(capsys, invocations[1])[1]
                 == _cli_bytes(capsys, invocations[1][:-1] + ["4"])[1])
    _check(record_criterion, "13 validation and determinism",
           {"6 violations named": all(caught) and len(caught) == 6,
            "repeat runs byte-identical": all(identical),
            "independent of --jobs": jobs_free},
           f"{sum(caught)}/6 violations, {sum(identical)}/{len(identical)} invocations stable")


@pytest.mark.parametrize("fields,expected", VIOLATIONS)
def test_violation_cases_individually(fields, expected):
    assert {(v.assumption, v.condition) for v in validate(ModelParams(**fields))} == expected
