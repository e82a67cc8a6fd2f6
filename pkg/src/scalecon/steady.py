"""Closed-form steady state of the Pareto model and a root-finding cross-check."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleEntryCostError, SolverError
from .params import (
    ModelParams,
    derived_constants,
    kappa_max,
    rental_rate,
    require_valid,
    threshold_closed_form,
)

# cutoffs within this relative distance below one are rounding at kappa == kappa_max
_ABAR_FLOOR_TOL = 1e-12


@dataclass(frozen=True)
class SteadyState:
    K: float
    C: float
    Y: float
    I: float
    r: float
    w: float
    Abar: float
    Ahat: float
    J: float
    E: float
    N: float
    TFP: float
    omega: float
    T: float
    Pi: float
    u: float
    s_l: float

    def replace(self, **changes) -> "SteadyState":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


STEADY_COLUMNS = tuple(f.name for f in dataclasses.fields(SteadyState))


def _floor_threshold(abar: float, params: ModelParams) -> float:
    if abar < 1.0 - _ABAR_FLOOR_TOL:
        raise InfeasibleEntryCostError(params.kappa, kappa_max(params))
    return max(abar, 1.0)


def _assemble(params: ModelParams, K: float, C: float, abar: float) -> SteadyState:
    dc = derived_constants(params)
    p = params
    ahat = dc.gamma * abar
    tfp = dc.omega * ahat
    Y = tfp * K ** (p.alpha * p.nu)
    J = 1.0 - abar ** (-p.theta)
    N = dc.n_firms
    E = N / (1.0 - J)
    w = p.kappa / p.phi * (p.theta * (p.mu - p.nu) - 1.0) * abar ** p.theta
    r = p.alpha * p.nu / p.mu * Y / K
    return SteadyState(
        K=K, C=C, Y=Y, I=p.delta * K, r=r, w=w, Abar=abar, Ahat=ahat, J=J, E=E, N=N,
        TFP=tfp, omega=dc.omega, T=E * p.kappa, Pi=0.0, u=dc.u, s_l=dc.s_l,
    )


def solve_closed_form(params: ModelParams) -> SteadyState:
    """Steady state from the closed forms.

    Raises InfeasibleEntryCostError (carrying ``kappa_max``) when the entry
    cost is too high for any firm to be inactive, and AssumptionViolation for
    parameter vectors outside the admissible region.
    """
    require_valid(params, include_entry_bound=False)
    p = params
    dc = derived_constants(p)
    an = p.alpha * p.nu
    r = rental_rate(p.beta, p.delta)
    K = (an * dc.omega * dc.gamma * dc.psi / (p.mu * r)) ** (
        (p.theta - 1.0) / (p.theta * (1.0 - an) - 1.0)
    )
    C = K * (p.mu * r / an - p.delta)
    abar = _floor_threshold(threshold_closed_form(p), p)
    return _assemble(p, K, C, abar)


def threshold_from_capital(K: float, params: ModelParams) -> float:
    """Cutoff implied by capital through the wage curves, Psi * K**(alpha nu/(theta-1))."""
    dc = derived_constants(params)
    return dc.psi * K ** (params.alpha * params.nu / (params.theta - 1.0))


RESIDUAL_NAMES = (
    "resource",
    "euler",
    "output",
    "rental",
    "wage",
    "free_entry_wage",
    "tfp",
)


def _rel(lhs: float, rhs: float) -> float:
    scale = max(abs(lhs), abs(rhs))
    return 0.0 if scale == 0.0 else (lhs - rhs) / scale


def _sides(C, K, Y, r, w, tfp, abar, params: ModelParams, dc):
    p = params
    return (
        (Y, C + p.delta * K),
        (p.beta * (r + 1.0 - p.delta), 1.0),
        (Y, tfp * K ** (p.alpha * p.nu)),
        (r, p.alpha * p.nu / p.mu * Y / K),
        (w, (1.0 - p.alpha) * p.nu / p.mu * Y / dc.u),
        (w, p.kappa / p.phi * (p.theta * (p.mu - p.nu) - 1.0) * abar ** p.theta),
        (tfp, dc.omega * dc.gamma * abar),
    )


def residuals(candidate: SteadyState, params: ModelParams) -> np.ndarray:
    """Relative residuals of the seven-equation steady-state system.

    Order as in ``RESIDUAL_NAMES``. Each entry is (lhs - rhs) / max(|lhs|, |rhs|).
    """
    dc = derived_constants(params)
    c = candidate
    sides = _sides(c.C, c.K, c.Y, c.r, c.w, c.TFP, c.Abar, params, dc)
    return np.array([_rel(a, b) for a, b in sides])


def _log_residuals(x: np.ndarray, params: ModelParams, dc) -> np.ndarray:
    C, K, Y, r, w, tfp, abar = np.exp(x)
    return np.array([math.log(a / b) for a, b in _sides(C, K, Y, r, w, tfp, abar, params, dc)])


def _jacobian(f, x: np.ndarray, fx: np.ndarray) -> np.ndarray:
    jac = np.empty((fx.size, x.size))
    for i in range(x.size):
        h = 1e-7 * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        jac[:, i] = (f(xp) - f(xm)) / (2.0 * h)
    return jac


@dataclass
class NewtonInfo:
    iterations: int
    residual_norm: float
    converged: bool


def initial_guess(params: ModelParams) -> SteadyState:
    """Deterministic starting point: the capital closed form with Gamma = Psi = 1."""
    dc = derived_constants(params)
    p = params
    an = p.alpha * p.nu
    r = rental_rate(p.beta, p.delta)
    K = (an * dc.omega / (p.mu * r)) ** ((p.theta - 1.0) / (p.theta * (1.0 - an) - 1.0))
    Y = dc.omega * K ** an
    C = Y - p.delta * K
    if C <= 0:
        C = 0.5 * Y
    w = (1.0 - p.alpha) * p.nu / p.mu * Y / dc.u
    return _assemble(p, K, C, 1.0).replace(Y=Y, r=r, w=w, TFP=dc.omega)


def solve_numeric(params: ModelParams, guess: SteadyState | None = None,
                  tol: float = 1e-13, maxiter: int = 100, full_output: bool = False):
    """Steady state as the root of the seven-equation system.

    Damped Newton in logs of (C, K, Y, r, w, TFP, Abar) with a central
    finite-difference Jacobian; the step is halved (at most 40 times) while the
    residual norm does not fall. Independent of the closed forms for K and Abar.
    """
    require_valid(params, include_entry_bound=False)
    dc = derived_constants(params)
    g = guess or initial_guess(params)
    x = np.log([g.C, g.K, g.Y, g.r, g.w, g.TFP, g.Abar])

    def f(z):
        return _log_residuals(z, params, dc)

    fx = f(x)
    norm = float(np.max(np.abs(fx)))
    it = 0
    while norm > tol and it < maxiter:
        it += 1
        step = np.linalg.solve(_jacobian(f, x, fx), -fx)
        lam = 1.0
        for _ in range(41):
            x_new = x + lam * step
            f_new = f(x_new)
            new_norm = float(np.max(np.abs(f_new)))
            if np.isfinite(new_norm) and new_norm < norm:
                break
            lam *= 0.5
        else:
            break
        x, fx, norm = x_new, f_new, new_norm
    converged = norm <= tol
    if not converged and norm > 1e-10:
        raise SolverError("steady-state Newton iteration did not converge", residual_norm=norm)
    C, K, _, _, _, _, abar = np.exp(x)
    ss = _assemble(params, float(K), float(C), _floor_threshold(float(abar), params))
    if full_output:
        return ss, NewtonInfo(iterations=it, residual_norm=norm, converged=True)
    return ss


def labour_share(ss: SteadyState) -> float:
    return ss.w / ss.Y  # labour supply is one


def zero_profit_gap(ss: SteadyState, params: ModelParams) -> float:
    """Aggregate zero-profit condition, (w/Y) N phi - (1 - nu/mu)(Abar/Ahat)**(1/(mu-nu))."""
    p = params
    lhs = ss.w / ss.Y * ss.N * p.phi
    rhs = (1.0 - p.nu / p.mu) * (ss.Abar / ss.Ahat) ** (1.0 / (p.mu - p.nu))
    return _rel(lhs, rhs)


def free_entry_gap(ss: SteadyState, params: ModelParams) -> float:
    """Expected operating profit of an entrant minus the entry cost, relative."""
    p = params
    lhs = p.phi * ss.w * (1.0 - ss.J) * ((ss.Ahat / ss.Abar) ** (1.0 / (p.mu - p.nu)) - 1.0)
    return _rel(lhs, p.kappa)


def steady_csv(states, header: bool = True) -> str:
    """CSV text with one row per steady state, columns ``STEADY_COLUMNS``, 17 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(STEADY_COLUMNS)
    for ss in states:
        writer.writerow([format(getattr(ss, c), ".17g") for c in STEADY_COLUMNS])
    return buf.getvalue()
