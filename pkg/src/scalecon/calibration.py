"""Calibration: discount factor, Pareto shape from firms per worker, overhead cost
from the inactive share, and the entry-to-overhead cost diagnostic."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import AssumptionViolation, CalibrationError, InfeasibleEntryCostError
from .params import ModelParams, kappa_max, rental_rate, require_valid, threshold_closed_form, validate
from .series import AnnualSeries
from .steady import SteadyState, solve_closed_form

# average entry-to-overhead cost ratio across industry studies; reported, never tested
LITERATURE_ENTRY_OVERHEAD_RATIO = 0.82
TARGET_REAL_RATE = 0.0208
TARGET_INACTIVE_SHARE = 0.10
NU_RANGE = (0.99, 1.05)
MU_RANGE = (1.21, 1.28)
PHI_BRACKET = (1e-4, 1e3)


@dataclass(frozen=True)
class CalibrationTargets:
    real_rate: float = TARGET_REAL_RATE
    inactive_share: float = TARGET_INACTIVE_SHARE
    n_over_l: float | None = None
    overhead_share_target: float | None = None

    def __post_init__(self):
        if not self.real_rate > 0:
            raise CalibrationError(f"real_rate must be > 0, got {self.real_rate}")
        if not 0 < self.inactive_share < 1:
            raise CalibrationError(f"inactive_share must lie in (0, 1), got {self.inactive_share}")
        if self.n_over_l is not None and not self.n_over_l > 0:
            raise CalibrationError(f"n_over_l must be > 0, got {self.n_over_l}")
        if self.overhead_share_target is not None and not 0 < self.overhead_share_target < 1:
            raise CalibrationError("overhead_share_target must lie in (0, 1)")


# discount factor -------------------------------------------------------------

def beta_from_rate(real_rate: float, delta: float, convention: str = "net") -> float:
    """Discount factor implied by a steady-state real interest rate.

    ``convention="net"`` reads the rate as net of depreciation, beta = 1/(1 + r).
    ``convention="literal"`` reads it as the rental rate, beta = 1/(r + 1 - delta).
    Both coincide when delta = 0. A result outside (0, 1) is a CalibrationError.
    """
    if not real_rate > 0:
        raise CalibrationError(f"real rate must be > 0, got {real_rate}")
    if convention == "net":
        beta = 1.0 / (1.0 + real_rate)
    elif convention == "literal":
        beta = 1.0 / (real_rate + 1.0 - delta)
    else:
        raise ValueError(f"unknown convention {convention!r}")
    if not 0 < beta < 1:
        raise CalibrationError(
            f"implied beta = {beta:.6g} lies outside (0, 1) under the {convention!r} convention "
            f"(real rate {real_rate}, delta {delta})"
        )
    return beta


@dataclass(frozen=True)
class BetaDiagnostic:
    beta_used: float
    implied_rental: float  # 1/beta - (1 - delta)
    implied_net_rate: float  # 1/beta - 1
    target_rate: float
    beta_net: float
    literal_feasible: bool

    @property
    def discrepancy(self) -> float:
        """Gap between the net rate implied by beta and the target real rate."""
        return self.implied_net_rate - self.target_rate

    def lines(self) -> list[str]:
        return [
            f"beta in use {self.beta_used:.6g} implies rental rate {self.implied_rental:.6g} "
            f"and net rate {self.implied_net_rate:.6g}",
            f"target real rate {self.target_rate:.6g} implies beta {self.beta_net:.6g} (net convention)",
            "literal convention " + ("feasible" if self.literal_feasible else "gives beta >= 1"),
            f"net-rate discrepancy {self.discrepancy:+.6g}",
        ]


def beta_diagnostic(params: ModelParams, real_rate: float = TARGET_REAL_RATE) -> BetaDiagnostic:
    try:
        beta_from_rate(real_rate, params.delta, "literal")
        literal_ok = True
    except CalibrationError:
        literal_ok = False
    return BetaDiagnostic(
        beta_used=params.beta,
        implied_rental=rental_rate(params.beta, params.delta),
        implied_net_rate=1.0 / params.beta - 1.0,
        target_rate=real_rate,
        beta_net=beta_from_rate(real_rate, params.delta, "net"),
        literal_feasible=literal_ok,
    )


# Pareto shape from firms per worker --------------------------------------------

def nl_from_theta(theta: float, phi: float, alpha: float, nu: float, mu: float) -> float:
    """Forward map: firms per worker N = (theta(mu-nu) - 1) / (phi (theta(mu - alpha nu) - 1))."""
    return (theta * (mu - nu) - 1.0) / (phi * (theta * (mu - alpha * nu) - 1.0))


def theta_from_nl(n_over_l: float, phi: float, alpha: float, nu: float, mu: float) -> float:
    """Invert the firms-per-worker relation for the Pareto shape.

    Raises CalibrationError when phi * N/L is outside (0, 1) or the implied
    denominator is not positive (no finite shape reproduces the ratio).
    """
    x = phi * n_over_l
    if not 0 < x < 1:
        raise CalibrationError(f"phi * N/L = {x:.6g} must lie in (0, 1)")
    denom = (mu - nu) - x * (mu - alpha * nu)
    if not denom > 0:
        raise CalibrationError(
            f"no valid theta: phi * N/L = {x:.6g} is at or above (mu-nu)/(mu-alpha nu) = "
            f"{(mu - nu) / (mu - alpha * nu):.6g}"
        )
    return (1.0 - x) / denom


def theta_flags(theta: float, alpha: float, nu: float, mu: float) -> list[str]:
    flags = []
    if not theta * (mu - nu) > 1:
        flags.append("theta*(mu - nu) > 1 fails")
    if not theta * (1 - alpha * nu) > 1:
        flags.append("theta*(1 - alpha*nu) > 1 fails")
    if not theta > 1:
        flags.append("theta > 1 fails")
    return flags


@dataclass(frozen=True)
class ThetaEstimate:
    year: int
    theta: float
    flags: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.flags


def theta_series(series: AnnualSeries, phi: float, alpha: float, nu=None, mu=None) -> list[ThetaEstimate]:
    """Annual shape estimates; years with no valid inverse are kept with NaN and a flag."""
    series.require(["n_over_l"], " for the theta back-out")
    n = len(series)
    nu_v = series.column("nu") if nu is None else np.full(n, float(nu))
    mu_v = series.column("mu") if mu is None else np.full(n, float(mu))
    out = []
    for year, nl, v, m in zip(series.years, series.column("n_over_l"), nu_v, mu_v):
        try:
            th = theta_from_nl(nl, phi, alpha, v, m)
            flags = tuple(theta_flags(th, alpha, v, m))
        except CalibrationError as exc:
            th, flags = float("nan"), (str(exc),)
        out.append(ThetaEstimate(int(year), th, flags))
    return out


def window_mean(estimates: list[ThetaEstimate], first: int, last: int) -> float:
    vals = [e.theta for e in estimates if first <= e.year <= last and e.ok]
    return float(np.mean(vals)) if vals else float("nan")


# overhead cost from the inactive share -----------------------------------------

def inactive_share(params: ModelParams) -> float:
    """Steady-state J from the closed-form cutoff; negative when kappa > kappa_max."""
    return 1.0 - threshold_closed_form(params) ** (-params.theta)


def kappa_max_over_range(params: ModelParams, nu_range=NU_RANGE, mu_range=MU_RANGE, n: int = 7) -> float:
    """Smallest entry-cost bound over a (nu, mu) grid with the other parameters fixed."""
    best = math.inf
    for nu in np.linspace(*nu_range, n):
        for mu in np.linspace(*mu_range, n):
            p = params.replace(nu=float(nu), mu=float(mu))
            if validate(p, include_entry_bound=False).ok:
                best = min(best, kappa_max(p))
    if not math.isfinite(best):
        raise CalibrationError("no admissible (nu, mu) pair in the range")
    return best


@dataclass
class PhiCalibration:
    phi: float
    kappa: float
    params: ModelParams
    achieved_J: float
    iterations: int
    kappa_rule: str
    notes: list[str] = field(default_factory=list)

    @property
    def residual(self) -> float:
        return self.achieved_J


def _solve_phi(target_J: float, params: ModelParams) -> float:
    lo, hi = (math.log(b) for b in PHI_BRACKET)

    def gap(log_phi):
        return inactive_share(params.replace(phi=math.exp(log_phi))) - target_J

    g_lo, g_hi = gap(lo), gap(hi)
    if not (g_lo <= 0 <= g_hi or g_hi <= 0 <= g_lo):
        raise CalibrationError(
            f"calibration infeasible: no phi in [{PHI_BRACKET[0]:g}, {PHI_BRACKET[1]:g}] gives "
            f"J = {target_J} (J spans {g_lo + target_J:.6g} to {g_hi + target_J:.6g})"
        )
    return math.exp(optimize.brentq(gap, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))


def phi_from_inactive_share(target_J: float, params: ModelParams, kappa_rule: str = "fixed",
                            tol: float = 1e-8, maxiter: int = 200, damping: float = 0.5) -> PhiCalibration:
    """Overhead cost that makes the steady-state inactive share equal ``target_J``.

    kappa_rule:
      ``fixed``  keep ``params.kappa``.
      ``bound``  set kappa to kappa_max at the solved phi and iterate to a joint
                 fixed point (damped, tolerance ``tol``). At kappa = kappa_max the
                 cutoff is one, so this only converges for target_J = 0.
      ``range``  set kappa to the smallest kappa_max over the nu and mu ranges
                 at the solved phi, iterated the same way.
    """
    if not 0 <= target_J < 1:
        raise CalibrationError(f"target inactive share must lie in [0, 1), got {target_J}")
    require_valid(params, include_entry_bound=False)
    if kappa_rule not in ("fixed", "bound", "range"):
        raise ValueError(f"unknown kappa rule {kappa_rule!r}")
    p = params
    notes: list[str] = []
    if kappa_rule == "fixed":
        phi = _solve_phi(target_J, p)
        p = p.replace(phi=phi)
        it = 1
    else:
        bound = kappa_max if kappa_rule == "bound" else kappa_max_over_range
        log_k = math.log(p.kappa)
        for it in range(1, maxiter + 1):
            phi = _solve_phi(target_J, p.replace(kappa=math.exp(log_k)))
            new_log_k = math.log(bound(p.replace(phi=phi)))
            step = new_log_k - log_k
            log_k += damping * step
            if abs(step) < tol:
                break
            if abs(log_k) > 700:
                break
        else:
            step = math.inf
        if abs(step) >= tol:
            raise CalibrationError(
                f"calibration infeasible: phi and kappa = {kappa_rule} rule have no joint fixed point "
                f"for J = {target_J}; kappa drifted to exp({log_k:.4g}) after {it} iterations"
            )
        p = p.replace(phi=phi, kappa=math.exp(log_k))
        phi = _solve_phi(target_J, p)
        p = p.replace(phi=phi)
    try:
        require_valid(p)
    except AssumptionViolation as exc:
        raise CalibrationError(f"calibrated parameters fail validation: {exc}") from None
    achieved = inactive_share(p)
    if abs(achieved - target_J) > tol:
        raise CalibrationError(f"root solve reached J = {achieved!r}, target {target_J}")
    return PhiCalibration(phi=p.phi, kappa=p.kappa, params=p, achieved_J=achieved,
                          iterations=it, kappa_rule=kappa_rule, notes=notes)


def phi_closed_form(target_J: float, params: ModelParams) -> float:
    """Direct inverse of the cutoff formula in phi; used to cross-check the root solve."""
    p = params
    an = p.alpha * p.nu
    abar = (1.0 - target_J) ** (-1.0 / p.theta)
    log_abar_now = math.log(threshold_closed_form(p))
    exponent = p.nu * (1.0 - p.alpha) / (p.theta * (1.0 - an) - 1.0)
    return p.phi * math.exp((math.log(abar) - log_abar_now) / exponent)


# entry-to-overhead cost ratio --------------------------------------------------

@dataclass(frozen=True)
class OverheadRatio:
    ratio: float
    literature: float = LITERATURE_ENTRY_OVERHEAD_RATIO

    @property
    def flagged(self) -> bool:
        return self.ratio >= 1.0


def kappa_to_overhead_ratio(ss: SteadyState, params: ModelParams) -> OverheadRatio:
    """kappa / (phi w); flagged when entry costs reach the per-period overhead bill."""
    return OverheadRatio(params.kappa / (params.phi * ss.w))


# annual calibration -------------------------------------------------------------

CALIBRATED_COLUMNS = ("year", "nu", "mu", "phi", "kappa", "theta", "beta", "J", "kappa_over_phi_w", "flags")


@dataclass
class CalibratedYear:
    year: int
    params: ModelParams
    J: float
    ratio: float
    flags: tuple[str, ...]


def _calibrate_year(year, base: ModelParams, row: dict, targets: CalibrationTargets,
                    theta_from_data: bool, kappa_rule: str) -> CalibratedYear:
    p = base.replace(**{k: row[k] for k in ("nu", "mu") if k in row and math.isfinite(row[k])})
    flags: list[str] = []
    if theta_from_data and math.isfinite(row.get("n_over_l", math.nan)):
        try:
            th = theta_from_nl(row["n_over_l"], p.phi, p.alpha, p.nu, p.mu)
            tflags = theta_flags(th, p.alpha, p.nu, p.mu)
            if tflags:
                flags += tflags
            else:
                p = p.replace(theta=th)
        except CalibrationError as exc:
            flags.append(str(exc))
    try:
        cal = phi_from_inactive_share(targets.inactive_share, p, kappa_rule=kappa_rule)
        p = cal.params
        ss = solve_closed_form(p)
        ratio = kappa_to_overhead_ratio(ss, p)
        if ratio.flagged:
            flags.append("kappa/(phi w) >= 1")
        return CalibratedYear(int(year), p, cal.achieved_J, ratio.ratio, tuple(flags))
    except (CalibrationError, AssumptionViolation, InfeasibleEntryCostError) as exc:
        flags.append(str(exc))
        return CalibratedYear(int(year), p, math.nan, math.nan, tuple(flags))


def calibrate_series(series: AnnualSeries, base: ModelParams, targets: CalibrationTargets | None = None,
                     theta_from_data: bool = False, kappa_rule: str = "fixed",
                     jobs: int | None = 1) -> list[CalibratedYear]:
    """Per-year phi (and optionally theta) calibration; years are independent."""
    targets = targets or CalibrationTargets()
    rows = []
    for i, year in enumerate(series.years):
        rows.append((year, {k: float(v[i]) for k, v in series.data.items()}))

    def work(item):
        year, row = item
        return _calibrate_year(year, base, row, targets, theta_from_data, kappa_rule)

    if jobs is not None and jobs <= 1:
        return [work(item) for item in rows]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(work, rows))


def calibrated_csv(years: list[CalibratedYear]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CALIBRATED_COLUMNS)
    for cy in years:
        p = cy.params
        nums = (p.nu, p.mu, p.phi, p.kappa, p.theta, p.beta, cy.J, cy.ratio)
        writer.writerow([str(cy.year)] + [format(float(v), ".17g") for v in nums] + [" | ".join(cy.flags)])
    return buf.getvalue()


@dataclass
class CalibrationReport:
    params: ModelParams
    phi: PhiCalibration
    steady_state: SteadyState
    ratio: OverheadRatio
    kappa_max: float
    beta: BetaDiagnostic

    def lines(self) -> list[str]:
        out = [
            f"phi = {self.phi.phi:.17g} (inactive share {self.phi.achieved_J:.17g}, kappa rule {self.phi.kappa_rule})",
            f"kappa = {self.params.kappa:.17g}, kappa_max = {self.kappa_max:.17g}",
            f"kappa/(phi w) = {self.ratio.ratio:.17g}" + (" FLAG >= 1" if self.ratio.flagged else "")
            + f" (literature average {self.ratio.literature})",
        ]
        return out + self.beta.lines()


def calibrate(params: ModelParams, targets: CalibrationTargets | None = None,
              kappa_rule: str = "fixed") -> CalibrationReport:
    """Solve phi for the target inactive share and collect the diagnostics."""
    targets = targets or CalibrationTargets()
    cal = phi_from_inactive_share(targets.inactive_share, params, kappa_rule=kappa_rule)
    ss = solve_closed_form(cal.params)
    return CalibrationReport(
        params=cal.params,
        phi=cal,
        steady_state=ss,
        ratio=kappa_to_overhead_ratio(ss, cal.params),
        kappa_max=kappa_max(cal.params),
        beta=beta_diagnostic(cal.params, targets.real_rate),
    )
