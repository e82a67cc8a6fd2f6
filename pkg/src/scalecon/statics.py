"""TFP decomposition, closed-form elasticities and finite-difference checks."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ScaleconError
from .params import ModelParams, derived_constants, validate
from .steady import SteadyState, solve_closed_form

AXES = ("phi", "nu", "mu", "kappa")


@dataclass(frozen=True)
class TFPDecomposition:
    ln_tfp: float
    ln_omega: float
    ln_ahat: float
    ln_gamma: float
    ln_abar: float


def decompose(ss: SteadyState, params: ModelParams) -> TFPDecomposition:
    """ln TFP split into allocative (Omega) and technical (Ahat) parts.

    ``ln_tfp`` is assembled from the parts so that additivity holds exactly;
    it agrees with ``log(ss.TFP)`` to rounding.
    """
    dc = derived_constants(params)
    ln_gamma = math.log(dc.gamma)
    ln_abar = math.log(ss.Abar)
    ln_ahat = ln_gamma + ln_abar
    ln_omega = math.log(dc.omega)
    return TFPDecomposition(ln_tfp=ln_omega + ln_ahat, ln_omega=ln_omega, ln_ahat=ln_ahat,
                            ln_gamma=ln_gamma, ln_abar=ln_abar)


def steady_decomposition(params: ModelParams) -> TFPDecomposition:
    return decompose(solve_closed_form(params), params)


@dataclass(frozen=True)
class Elasticity:
    total: float
    allocative: float
    technical: float


def dlnTFP_dlnphi(params: ModelParams) -> Elasticity:
    """Overhead-cost elasticity of TFP and its allocative/technical split."""
    p = params
    allocative = -(1.0 - p.nu)
    technical = p.nu * (1.0 - p.alpha) / (p.theta * (1.0 - p.alpha * p.nu) - 1.0)
    return Elasticity(allocative + technical, allocative, technical)


def dln_dkappa(params: ModelParams) -> tuple[float, float]:
    """(d ln Omega / d ln kappa, d ln Ahat / d ln kappa); the first is identically zero."""
    p = params
    an = p.alpha * p.nu
    return 0.0, -(1.0 - an) / (p.theta * (1.0 - an) - 1.0)


def dlnTFP_dlnkappa(params: ModelParams) -> Elasticity:
    allocative, technical = dln_dkappa(params)
    return Elasticity(allocative + technical, allocative, technical)


# sweeps ----------------------------------------------------------------------

SWEEP_COLUMNS = ("axis_value", "valid", "ln_tfp", "ln_omega", "ln_ahat", "ln_abar", "J", "N", "u", "s_l")


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    valid: bool
    decomposition: TFPDecomposition | None
    J: float
    N: float
    u: float
    s_l: float
    reason: str = ""

    def values(self) -> tuple:
        d = self.decomposition
        nan = float("nan")
        parts = (d.ln_tfp, d.ln_omega, d.ln_ahat, d.ln_abar) if d else (nan,) * 4
        return (self.axis_value, self.valid) + parts + (self.J, self.N, self.u, self.s_l)


@dataclass
class SweepTable:
    axis: str
    rows: list[SweepRow]

    def column(self, name: str) -> np.ndarray:
        i = SWEEP_COLUMNS.index(name)
        return np.array([row.values()[i] for row in self.rows], dtype=float)

    @property
    def valid(self) -> np.ndarray:
        return np.array([row.valid for row in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in self.rows:
            vals = row.values()
            writer.writerow([format(vals[0], ".17g"), "true" if vals[1] else "false"]
                            + [format(float(v), ".17g") for v in vals[2:]])
        return buf.getvalue()


def grid(lo: float, hi: float, n: int, log: bool = False) -> np.ndarray:
    """Inclusive grid; ``log=True`` spaces points geometrically."""
    if n < 1:
        raise ValueError("grid needs at least one point")
    if log:
        if lo <= 0 or hi <= 0:
            raise DomainError("log-spaced grids need positive endpoints")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def _sweep_point(params: ModelParams, axis: str, value: float) -> SweepRow:
    nan = float("nan")
    p = params.replace(**{axis: float(value)})
    try:
        report = validate(p)
    except ScaleconError as exc:
        return SweepRow(float(value), False, None, nan, nan, nan, nan, reason=str(exc))
    if not report.ok:
        return SweepRow(float(value), False, None, nan, nan, nan, nan, reason=str(report))
    ss = solve_closed_form(p)
    return SweepRow(float(value), True, decompose(ss, p), ss.J, ss.N, ss.u, ss.s_l)


def sweep(params: ModelParams, axis: str, values, jobs: int | None = 1) -> SweepTable:
    """Steady-state decomposition at each grid value of one parameter.

    Invalid points are kept as rows with ``valid=False`` and NaN entries.
    Points are independent; ``jobs > 1`` evaluates them on a thread pool and
    the row order always follows the grid.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    values = [float(v) for v in np.atleast_1d(values)]
    if jobs is not None and jobs <= 1:
        rows = [_sweep_point(params, axis, v) for v in values]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda v: _sweep_point(params, axis, v), values))
    return SweepTable(axis, rows)


# finite differences ----------------------------------------------------------

def _ln_components(params: ModelParams) -> np.ndarray:
    d = steady_decomposition(params)
    return np.array([d.ln_tfp, d.ln_omega, d.ln_ahat])


def _shifted(params: ModelParams, axis: str, factor: float) -> ModelParams:
    p = params.replace(**{axis: getattr(params, axis) * factor})
    if not validate(p).ok:
        raise DomainError(f"{axis} * {factor!r} leaves the admissible region")
    return p


def central_elasticity(params: ModelParams, axis: str, rel_step: float = 1e-5) -> np.ndarray:
    """Central differences in logs of (ln TFP, ln Omega, ln Ahat) with respect to ln axis."""
    h = math.log1p(rel_step)
    up = _ln_components(_shifted(params, axis, math.exp(h)))
    dn = _ln_components(_shifted(params, axis, math.exp(-h)))
    return (up - dn) / (2.0 * h)


def richardson_elasticity(params: ModelParams, axis: str, rel_step: float = 1e-3) -> np.ndarray:
    """Five-point central stencil in ln axis, Richardson-extrapolated over h and h/2."""

    def five_point(h):
        f = {k: _ln_components(_shifted(params, axis, math.exp(k * h))) for k in (-2, -1, 1, 2)}
        return (f[-2] - 8.0 * f[-1] + 8.0 * f[1] - f[2]) / (12.0 * h)

    h = math.log1p(rel_step)
    d1, d2 = five_point(h), five_point(0.5 * h)
    return d2 + (d2 - d1) / 15.0


@dataclass(frozen=True)
class FDCheck:
    axis: str
    analytic: float | None
    finite_difference: float
    rel_step: float

    @property
    def rel_error(self) -> float:
        if self.analytic is None:
            return float("nan")
        return abs(self.analytic - self.finite_difference) / max(abs(self.analytic), 1e-12)

    def passed(self, tol: float = 1e-6) -> bool:
        return self.analytic is None or self.rel_error < tol


def elasticity(params: ModelParams, axis: str) -> Elasticity | None:
    if axis == "phi":
        return dlnTFP_dlnphi(params)
    if axis == "kappa":
        return dlnTFP_dlnkappa(params)
    return None


def fd_check(params: ModelParams, axis: str, rel_step: float = 1e-5, retries: int = 3) -> FDCheck:
    """Analytic elasticity of ln TFP against a finite difference.

    For phi and kappa the closed forms are compared with central differences.
    For nu and mu no closed form exists; the Richardson-extrapolated five-point
    estimate is returned as the value itself. If a perturbed point is
    inadmissible the step is divided by ten, up to ``retries`` times.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    analytic = elasticity(params, axis)
    step = rel_step
    for attempt in range(retries + 1):
        try:
            if analytic is None:
                fd = richardson_elasticity(params, axis, rel_step=max(step, 1e-4))
            else:
                fd = central_elasticity(params, axis, step)
            break
        except (DomainError, ScaleconError):
            if attempt == retries:
                raise
            step /= 10.0
    return FDCheck(axis, None if analytic is None else analytic.total, float(fd[0]), step)


def interior_minimum(values, series):
    """Grid point at which ``series`` is smallest, or None if it sits on an end point."""
    series = np.asarray(series, dtype=float)
    i = int(np.nanargmin(series))
    if i in (0, len(series) - 1):
        return None
    return float(np.asarray(values)[i])
