"""Firm-level policies, scale economies, cost curves and aggregation checks."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields

import numpy as np
from scipy import special

from .errors import DomainError
from .params import ModelParams, derived_constants
from .pareto import TechPanel
from .steady import SteadyState


@dataclass(frozen=True)
class FirmRecord:
    j: float
    a: float
    active: bool
    k: float
    ell: float
    ell_tot: float
    y: float
    py: float
    pi: float
    s: float


FIRM_COLUMNS = ("j", "a", "active", "k", "ell", "y", "py", "pi", "s")


@dataclass
class FirmPanel:
    """Policies for many firms at once; arrays share one index."""

    j: np.ndarray
    a: np.ndarray
    active: np.ndarray
    k: np.ndarray
    ell: np.ndarray
    ell_tot: np.ndarray
    y: np.ndarray
    py: np.ndarray
    pi: np.ndarray
    s: np.ndarray

    def __len__(self) -> int:
        return len(self.a)

    def __getitem__(self, i) -> FirmRecord:
        return FirmRecord(*(v[i].item() for v in (getattr(self, f.name) for f in fields(self))))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(FIRM_COLUMNS)
        for i in range(len(self)):
            row = []
            for c in FIRM_COLUMNS:
                v = getattr(self, c)[i]
                row.append(str(int(v)) if c == "active" else format(float(v), ".17g"))
            writer.writerow(row)
        return buf.getvalue()


def threshold_firm(ss: SteadyState, params: ModelParams) -> tuple[float, float]:
    """Capital and production labour of the zero-profit firm."""
    scale = (ss.Abar / ss.Ahat) ** (1.0 / (params.mu - params.nu))
    return scale * ss.K / ss.N, scale * ss.u / ss.N


def firm_panel(a, ss: SteadyState, params: ModelParams, j=None) -> FirmPanel:
    """Vectorised firm policies at technology levels ``a``.

    Inactive firms (``a < Abar``) carry zeros rather than hypothetical values.
    The scale-economies column is the firm's S at its optimum.
    """
    p = params
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if j is None:
        j = 1.0 - a ** (-p.theta)
    j = np.atleast_1d(np.asarray(j, dtype=float))
    m = p.mu - p.nu
    active = a >= ss.Abar
    k_J, l_J = threshold_firm(ss, p)
    rel = np.where(active, (a / ss.Abar) ** (1.0 / m), 0.0)
    k = k_J * rel
    ell = l_J * rel
    py = p.mu / (p.alpha * p.nu) * ss.r * k
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(active, a * (k ** p.alpha * ell ** (1.0 - p.alpha)) ** p.nu, 0.0)
        s = np.where(active, p.nu + m / rel, 0.0)
    pi = np.where(active, p.phi * ss.w * (rel - 1.0), 0.0)
    ell_tot = np.where(active, ell + p.phi, 0.0)
    return FirmPanel(j=j, a=a, active=active, k=k, ell=ell, ell_tot=ell_tot, y=y, py=py, pi=pi, s=s)


def firm_policy(a: float, ss: SteadyState, params: ModelParams) -> FirmRecord:
    return firm_panel([a], ss, params)[0]


def direct_profit(panel: FirmPanel, ss: SteadyState, params: ModelParams) -> np.ndarray:
    """Revenue minus factor and overhead costs, computed from the policy columns."""
    return np.where(panel.active, panel.py - ss.r * panel.k - ss.w * (panel.ell + params.phi), 0.0)


def demand_price(panel: FirmPanel, ss: SteadyState, params: ModelParams) -> np.ndarray:
    """Price from the final-good producer's inverse demand."""
    mu = params.mu
    return (ss.N * panel.y / ss.Y) ** ((1.0 - mu) / mu)


def scale_schedule(a, abar: float, nu: float, mu: float):
    """Scale economies S(A) = nu + (mu - nu)(Abar/A)**(1/(mu-nu)) for a free cutoff.

    Returns ``(s, active)``; values below the cutoff are the hypothetical
    schedule an inactive firm would face.
    """
    a = np.asarray(a, dtype=float)
    s = nu + (mu - nu) * (abar / a) ** (1.0 / (mu - nu))
    return s, a >= abar


def total_labour_elasticity(ell, *, nu: float, alpha: float, phi: float):
    """Output elasticity with respect to total labour, nu(1-alpha)(1 + phi/ell)."""
    return nu * (1.0 - alpha) * (1.0 + phi / np.asarray(ell, dtype=float))


def total_labour_elasticity_at_optimum(a, ss: SteadyState, params: ModelParams):
    """The same elasticity written through relative technology at the optimum."""
    p = params
    m = p.mu - p.nu
    return p.nu * (1.0 - p.alpha) + m * (ss.Abar / np.asarray(a, dtype=float)) ** (1.0 / m)


def overhead_labour_experiment(ell_tot: float, phi: float, rise: float = 0.10) -> dict[str, float]:
    """Production labour before and after a proportional rise in total labour.

    With output produced one-for-one by production labour, the percentage
    change in production labour is also the change in output.
    """
    before = ell_tot - phi
    after = ell_tot * (1.0 + rise) - phi
    return {"before": before, "after": after, "pct_change": 100.0 * (after / before - 1.0)}


# cost curves ----------------------------------------------------------------

@dataclass(frozen=True)
class CostCurvePoint:
    y: float
    avc: float
    afc: float
    atc: float
    mc: float
    s_of_y: float


COST_COLUMNS = ("y", "avc", "afc", "atc", "mc", "s")


@dataclass
class CostCurves:
    y: np.ndarray
    avc: np.ndarray
    afc: np.ndarray
    atc: np.ndarray
    mc: np.ndarray
    s: np.ndarray

    def __len__(self) -> int:
        return len(self.y)

    def points(self) -> list[CostCurvePoint]:
        return [CostCurvePoint(*(float(getattr(self, c)[i]) for c in COST_COLUMNS))
                for i in range(len(self))]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COST_COLUMNS)
        for i in range(len(self)):
            writer.writerow([format(float(getattr(self, c)[i]), ".17g") for c in COST_COLUMNS])
        return buf.getvalue()


def unit_cost(r: float, w: float, alpha: float) -> float:
    """Minimum cost of one unit of the Cobb-Douglas input bundle."""
    return (r / alpha) ** alpha * (w / (1.0 - alpha)) ** (1.0 - alpha)


def variable_cost(y, a: float, r: float, w: float, params: ModelParams):
    return unit_cost(r, w, params.alpha) * (np.asarray(y, dtype=float) / a) ** (1.0 / params.nu)


def cost_curves(a: float, grid, r: float, w: float, params: ModelParams) -> CostCurves:
    """Average, marginal and scale-economies schedules over an output grid."""
    y = np.asarray(grid, dtype=float)
    if np.any(~(y > 0)):
        raise DomainError("output grid must be strictly positive")
    vc = variable_cost(y, a, r, w, params)
    mc = vc / (params.nu * y)
    avc = vc / y
    afc = w * params.phi / y
    atc = avc + afc
    return CostCurves(y=y, avc=avc, afc=afc, atc=atc, mc=mc, s=atc / mc)


def min_efficient_scale(a: float, r: float, w: float, params: ModelParams) -> float:
    """Output where ATC is minimal; only exists with rising marginal cost (nu < 1)."""
    nu = params.nu
    if nu >= 1.0:
        return math.inf
    vc_star = w * params.phi * nu / (1.0 - nu)
    return a * (vc_star / unit_cost(r, w, params.alpha)) ** nu


def default_output_grid(y_ref: float, n: int = 200, lo: float = 0.01, hi: float = 100.0) -> np.ndarray:
    return np.geomspace(lo * y_ref, hi * y_ref, n)


# aggregation ----------------------------------------------------------------

@dataclass
class QuadraturePanel:
    """Nodes and weights for integrals over active draws j in (J, 1).

    ``sum(weight * f(j))`` approximates the integral of ``f`` over (J, 1).
    Nodes are kept as ``1 - j`` because the upper nodes round to one in ``j``.
    """

    one_minus_j: np.ndarray
    weight: np.ndarray

    @property
    def j(self) -> np.ndarray:
        return 1.0 - self.one_minus_j

    def technology(self, theta: float) -> np.ndarray:
        return self.one_minus_j ** (-1.0 / theta)


def quadrature_panel(J: float, params: ModelParams, n: int = 80) -> QuadraturePanel:
    """Gauss-Laguerre rule in the log-survival coordinate.

    With ``1 - j = (1 - J) exp(-z / (1 - p))`` and ``p = 1/(theta(mu - nu))``,
    every size variable (proportional to ``(1-j)**-p``) becomes the Laguerre
    weight times a constant, and constants become a smooth decaying function.
    """
    p = 1.0 / (params.theta * (params.mu - params.nu))
    q = 1.0 - p
    z, wz = special.roots_laguerre(n)
    one_minus_j = (1.0 - J) * np.exp(-z / q)
    # dj = (1-J) exp(-z/q) / q dz; divide by the Laguerre weight exp(-z)
    weight = wz * (1.0 - J) / q * np.exp(-z * p / q)
    return QuadraturePanel(one_minus_j=one_minus_j, weight=weight)


@dataclass
class AggregationReport:
    """Relative errors of the aggregation identities (and standard errors for Monte Carlo)."""

    capital: float
    labour: float
    output: float
    revenue: float
    labour_share: float
    entrants: float
    standard_errors: dict[str, float] | None = None

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in ("capital", "labour", "output", "revenue", "labour_share", "entrants")}

    def max_error(self) -> float:
        return max(abs(v) for v in self.as_dict().values())

    def within(self, n_se: float = 3.0) -> dict[str, bool]:
        """Monte Carlo only: each identity within ``n_se`` standard errors."""
        if self.standard_errors is None:
            raise ValueError("no standard errors on a quadrature report")
        return {k: abs(v) <= n_se * self.standard_errors[k] for k, v in self.as_dict().items()}


def aggregation_check(panel, ss: SteadyState, params: ModelParams) -> AggregationReport:
    """Integrate firm policies over the draw distribution and compare with aggregates.

    ``panel`` is either a QuadraturePanel (deterministic, errors should be at
    rounding level) or a sampled TechPanel (errors come with standard errors).
    Entrant mass comes from the steady state, so the labour identity checks
    both firm-level labour demand and the cutoff jointly.
    """
    p = params
    if isinstance(panel, QuadraturePanel):
        a = panel.technology(p.theta)
        f = firm_panel(a, ss, p, j=panel.j)
        f.active[:] = True  # nodes lie above the cutoff by construction
        wgt = panel.weight

        def integral(x):
            return ss.E * math.fsum(wgt * x)

        K = integral(f.k)
        L = integral(f.ell + p.phi)
        M = integral(f.y ** (1.0 / p.mu))
        R = integral(f.py)
        Nn = ss.E * math.fsum(wgt)
        Y = Nn ** (1.0 - p.mu) * M ** p.mu
        return AggregationReport(
            capital=K / ss.K - 1.0,
            labour=L - 1.0,
            output=Y / ss.Y - 1.0,
            revenue=R / ss.Y - 1.0,
            labour_share=ss.w * L / R / ss.s_l - 1.0,
            entrants=Nn / ss.N - 1.0,
        )
    if isinstance(panel, TechPanel):
        return _monte_carlo_check(panel, ss, p)
    raise TypeError(f"unsupported panel type {type(panel).__name__}")


def _monte_carlo_check(panel: TechPanel, ss: SteadyState, p: ModelParams) -> AggregationReport:
    f = firm_panel(panel.a, ss, p, j=panel.j)
    n = len(panel)
    act = f.active.astype(float)

    def mean_se(x):
        return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(n))

    k_m, k_se = mean_se(f.k)
    l_m, l_se = mean_se(f.ell + p.phi * act)
    y_m, y_se = mean_se(np.where(f.active, f.y ** (1.0 / p.mu), 0.0))
    r_m, r_se = mean_se(f.py)
    a_m, a_se = mean_se(act)
    E = ss.E
    K, L, M, R, Nn = E * k_m, E * l_m, E * y_m, E * r_m, E * a_m
    # CES aggregate with the theoretical firm mass; delta method on the mean
    Y = ss.N ** (1.0 - p.mu) * M ** p.mu
    ratio = l_m / r_m
    ratio_se = float(np.std(f.ell + p.phi * act - ratio * f.py, ddof=1) / math.sqrt(n) / r_m)
    share = ss.w * ratio / ss.s_l
    return AggregationReport(
        capital=K / ss.K - 1.0,
        labour=L - 1.0,
        output=Y / ss.Y - 1.0,
        revenue=R / ss.Y - 1.0,
        labour_share=share - 1.0,
        entrants=Nn / ss.N - 1.0,
        standard_errors={
            "capital": E * k_se / ss.K,
            "labour": E * l_se,
            "output": p.mu * Y / M * E * y_se / ss.Y,
            "revenue": E * r_se / ss.Y,
            "labour_share": ss.w * ratio_se / ss.s_l,
            "entrants": E * a_se / ss.N,
        },
    )
