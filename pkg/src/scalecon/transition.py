"""Perfect-foresight transition paths of the reduced (K, C) system.

Per-period statics are power laws in capital; the dynamic system is

    K[t+1] = F(K[t]) + (1 - delta) K[t] - C[t]
    beta (r(K[t+1]) + 1 - delta) (C[t] / C[t+1])**sigma = 1

with F(K) = Omega Gamma Psi K**e, e = alpha nu theta / (theta - 1), and
r(K) = (alpha nu / mu) F(K) / K.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import HorizonTooShortError, SolverError
from .params import ModelParams, derived_constants, require_valid
from .steady import SteadyState, solve_closed_form


@dataclass(frozen=True)
class _Technology:
    scale: float  # Omega Gamma Psi
    e: float
    share: float  # alpha nu / mu
    delta: float
    beta: float
    sigma: float

    @classmethod
    def from_params(cls, params: ModelParams) -> "_Technology":
        dc = derived_constants(params)
        p = params
        return cls(
            scale=dc.omega * dc.gamma * dc.psi,
            e=p.alpha * p.nu * p.theta / (p.theta - 1.0),
            share=p.alpha * p.nu / p.mu,
            delta=p.delta,
            beta=p.beta,
            sigma=p.sigma,
        )

    def output(self, K):
        return self.scale * K ** self.e

    def output_prime(self, K):
        return self.e * self.scale * K ** (self.e - 1.0)

    def rental(self, K):
        return self.share * self.scale * K ** (self.e - 1.0)

    def rental_prime(self, K):
        return (self.e - 1.0) * self.share * self.scale * K ** (self.e - 2.0)

    def resources(self, K):
        return self.output(K) + (1.0 - self.delta) * K


@dataclass
class PeriodBlock:
    Y: np.ndarray
    r: np.ndarray
    w: np.ndarray
    Abar: np.ndarray
    TFP: np.ndarray
    N: np.ndarray
    J: np.ndarray
    u: np.ndarray


def per_period_block(K, params: ModelParams) -> PeriodBlock:
    """Static equilibrium given capital: cutoff, TFP, factor prices, output."""
    p = params
    dc = derived_constants(p)
    K = np.asarray(K, dtype=float)
    abar = dc.psi * K ** (p.alpha * p.nu / (p.theta - 1.0))
    tfp = dc.omega * dc.gamma * abar
    Y = tfp * K ** (p.alpha * p.nu)
    r = p.alpha * p.nu / p.mu * Y / K
    w = p.kappa / p.phi * (p.theta * (p.mu - p.nu) - 1.0) * abar ** p.theta
    J = 1.0 - abar ** (-p.theta)
    ones = np.ones_like(K)
    return PeriodBlock(Y=Y, r=r, w=w, Abar=abar, TFP=tfp, N=dc.n_firms * ones, J=J, u=dc.u * ones)


def rental_elasticity(params: ModelParams) -> float:
    """d ln r / d ln K along the static block; negative under the shape assumption."""
    p = params
    return (1.0 - p.theta * (1.0 - p.alpha * p.nu)) / (p.theta - 1.0)


@dataclass
class TransitionPath:
    T: int
    k_path: np.ndarray
    c_path: np.ndarray
    block: PeriodBlock
    euler_residuals: np.ndarray
    resource_residuals: np.ndarray
    steady_state: SteadyState
    iterations: int

    @property
    def max_residual(self) -> float:
        return float(max(np.max(np.abs(self.euler_residuals)), np.max(np.abs(self.resource_residuals))))

    @property
    def terminal_gap(self) -> float:
        return abs(self.k_path[-1] / self.steady_state.K - 1.0)

    def to_csv(self) -> str:
        cols = ("t", "K", "C", "Y", "r", "w", "Abar", "TFP", "N", "J", "euler_resid", "resource_resid")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        b = self.block
        for t in range(self.T + 1):
            row = [str(t)] + [
                format(float(x), ".17g")
                for x in (self.k_path[t], self.c_path[t], b.Y[t], b.r[t], b.w[t],
                          b.Abar[t], b.TFP[t], b.N[t], b.J[t])
            ]
            if t < self.T:
                row += [format(float(self.euler_residuals[t]), ".17g"),
                        format(float(self.resource_residuals[t]), ".17g")]
            else:
                row += ["", ""]
            writer.writerow(row)
        return buf.getvalue()


def _unpack(z: np.ndarray, K0: float, tech: _Technology, K_end: float):
    K = np.concatenate(([K0], z[0::2]))  # K_0 .. K_T
    C = z[1::2]  # C_0 .. C_{T-1}
    C_T = tech.resources(K[-1]) - K_end
    return K, np.concatenate((C, [C_T]))


def _residuals(z, K0, tech: _Technology, K_end):
    K, C = _unpack(z, K0, tech, K_end)
    T = len(K) - 1
    res = np.empty(2 * T)
    res[0::2] = (tech.resources(K[:-1]) - C[:-1] - K[1:]) / K_end
    res[1::2] = tech.beta * (tech.rental(K[1:]) + 1.0 - tech.delta) * (C[:-1] / C[1:]) ** tech.sigma - 1.0
    return res


def _banded_jacobian(z, K0, tech: _Technology, K_end) -> np.ndarray:
    """Analytic Jacobian in LAPACK banded storage, two sub- and two super-diagonals."""
    K, C = _unpack(z, K0, tech, K_end)
    T = len(K) - 1
    n = 2 * T
    ab = np.zeros((5, n))

    def put(row, col, value):
        ab[2 + row - col, col] = value

    s = tech.sigma
    for t in range(T):
        rk, ek = 2 * t, 2 * t + 1
        # resource row t: K_t (col 2t-2), K_{t+1} (2t), C_t (2t+1)
        if t > 0:
            put(rk, 2 * t - 2, (tech.output_prime(K[t]) + 1.0 - tech.delta) / K_end)
        put(rk, 2 * t, -1.0 / K_end)
        put(rk, 2 * t + 1, -1.0 / K_end)
        # Euler row t: K_{t+1} (2t), C_t (2t+1), C_{t+1} (2t+3, or via K_T at the end)
        G = tech.beta * (tech.rental(K[t + 1]) + 1.0 - tech.delta)
        H = (C[t] / C[t + 1]) ** s
        dK = tech.beta * tech.rental_prime(K[t + 1]) * H
        dCnext = -G * s * H / C[t + 1]
        if t == T - 1:
            dK += dCnext * (tech.output_prime(K[T]) + 1.0 - tech.delta)
        else:
            put(ek, 2 * t + 3, dCnext)
        put(ek, 2 * t, dK)
        put(ek, 2 * t + 1, G * s * H / C[t])
    return ab


def _dense_from_banded(ab: np.ndarray) -> np.ndarray:
    n = ab.shape[1]
    out = np.zeros((n, n))
    for col in range(n):
        for row in range(max(0, col - 2), min(n, col + 3)):
            out[row, col] = ab[2 + row - col, col]
    return out


def _fd_jacobian(z, K0, tech, K_end, h=1e-6) -> np.ndarray:
    n = z.size
    jac = np.empty((n, n))
    for i in range(n):
        step = h * max(1.0, abs(z[i]))
        zp, zm = z.copy(), z.copy()
        zp[i] += step
        zm[i] -= step
        jac[:, i] = (_residuals(zp, K0, tech, K_end) - _residuals(zm, K0, tech, K_end)) / (2 * step)
    return jac


def _stacked_newton(K0, T, tech, K_end, tol, maxiter=50, jacobian="analytic"):
    t = np.arange(1, T + 1)
    K_guess = K_end + (K0 - K_end) * 0.9 ** t
    K_full = np.concatenate(([K0], K_guess))
    C_guess = tech.resources(K_full[:-1]) - K_full[1:]
    if np.any(C_guess <= 0):
        C_guess = np.full(T, 0.5 * tech.output(K_end))
    z = np.empty(2 * T)
    z[0::2] = K_guess
    z[1::2] = C_guess
    res = _residuals(z, K0, tech, K_end)
    norm = float(np.max(np.abs(res)))
    target = min(tol, 1e-12)
    it = 0
    while norm > target and it < maxiter:
        it += 1
        if jacobian == "analytic":
            step = linalg.solve_banded((2, 2), _banded_jacobian(z, K0, tech, K_end), -res)
        else:
            step = np.linalg.solve(_fd_jacobian(z, K0, tech, K_end), -res)
        lam = 1.0
        for _ in range(41):
            z_new = z + lam * step
            with np.errstate(invalid="ignore", over="ignore"):  # trial points may leave K > 0
                K_new, C_new = _unpack(z_new, K0, tech, K_end)
            if np.all(K_new > 0) and np.all(C_new > 0):
                res_new = _residuals(z_new, K0, tech, K_end)
                new_norm = float(np.max(np.abs(res_new)))
                if new_norm < norm:
                    break
            lam *= 0.5
        else:
            break
        z, res, norm = z_new, res_new, new_norm
    if norm > tol:
        raise SolverError("stacked Newton did not converge", residual_norm=norm, residuals=res)
    return z, it


def solve_transition(params_new: ModelParams, K0: float, T: int = 200, tol: float = 1e-9,
                     max_doublings: int = 3, jacobian: str = "analytic") -> TransitionPath:
    """Saddle path from initial capital ``K0`` to the steady state of ``params_new``.

    Any parameter change is unanticipated and permanent from t = 0. The
    terminal condition pins K[T+1] at the new steady state; when K[T] is still
    more than ``100 * tol`` away the horizon is doubled, at most
    ``max_doublings`` times.
    """
    require_valid(params_new)
    if not K0 > 0:
        raise ValueError("initial capital must be positive")
    if T < 2:
        raise ValueError("horizon must be at least 2")
    ss = solve_closed_form(params_new)
    tech = _Technology.from_params(params_new)
    for attempt in range(max_doublings + 1):
        z, it = _stacked_newton(K0, T, tech, ss.K, tol, jacobian=jacobian)
        K, C = _unpack(z, K0, tech, ss.K)
        gap = abs(K[-1] / ss.K - 1.0)
        if gap <= 100 * tol:
            break
        if attempt == max_doublings:
            raise HorizonTooShortError(
                f"terminal capital gap {gap:.3e} exceeds {100 * tol:.1e} at T={T}"
            )
        T *= 2
    block = per_period_block(K, params_new)
    if np.any(block.Abar < 1.0):
        warnings.warn("transition path leaves the interior region (Abar < 1 in some periods)",
                      RuntimeWarning, stacklevel=2)
    resources = tech.resources(K[:-1])
    euler = tech.beta * (tech.rental(K[1:]) + 1.0 - tech.delta) * (C[:-1] / C[1:]) ** tech.sigma - 1.0
    resource = (resources - C[:-1] - K[1:]) / resources
    return TransitionPath(T=T, k_path=K, c_path=C, block=block, euler_residuals=euler,
                          resource_residuals=resource, steady_state=ss, iterations=it)


def permanent_change(params_old: ModelParams, params_new: ModelParams, **kwargs) -> TransitionPath:
    """Transition after a surprise switch from the old to the new parameter vector."""
    return solve_transition(params_new, solve_closed_form(params_old).K, **kwargs)


# shooting oracle -------------------------------------------------------------

@dataclass
class ShootingResult:
    k_path: np.ndarray
    c_path: np.ndarray
    c0: float
    certified: int  # last index where the bracketing paths agree to 1e-10 relative
    diverged_at: int | None


def simulate(params: ModelParams, K0: float, C0: float, T: int):
    """Forward iteration from (K0, C0); stops early when K or C leaves (0, inf)."""
    tech = _Technology.from_params(params)
    K = np.full(T + 1, np.nan)
    C = np.full(T + 1, np.nan)
    K[0], C[0] = K0, C0
    for t in range(T):
        K[t + 1] = tech.resources(K[t]) - C[t]
        if not K[t + 1] > 0:
            break
        C[t + 1] = C[t] * (tech.beta * (tech.rental(K[t + 1]) + 1.0 - tech.delta)) ** (1.0 / tech.sigma)
        if not (math.isfinite(C[t + 1]) and C[t + 1] > 0):
            break
    return K, C


def _classify(K: np.ndarray, K_ss: float, direction: float):
    """+1 when consumption was too high, -1 when too low, 0 if undecided; plus the index."""
    # below the steady state, too much consumption stalls accumulation and too
    # little overshoots; above it the roles swap
    for t in range(len(K) - 1):
        if not K[t + 1] > 0:
            return 1, t + 1
        if direction * (K[t + 1] - K[t]) < 0:
            return int(direction), t + 1
        if direction * (K[t + 1] - K_ss) > 0:
            return -int(direction), t + 1
    return 0, None


def shooting_path(params: ModelParams, K0: float, T: int = 200, max_bisections: int = 200) -> ShootingResult:
    """Saddle path by bisection on initial consumption.

    Independent of the stacked solver: no Jacobian and no terminal condition,
    only forward iteration and the sign of the eventual divergence.
    """
    ss = solve_closed_form(params)
    tech = _Technology.from_params(params)
    direction = math.copysign(1.0, ss.K - K0) if K0 != ss.K else 0.0
    if direction == 0.0:
        K = np.full(T + 1, ss.K)
        C = np.full(T + 1, ss.C)
        return ShootingResult(K, C, ss.C, T, None)
    lo, hi = 0.0, float(tech.resources(K0))
    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        verdict, _ = _classify(simulate(params, K0, mid, T)[0], ss.K, direction)
        if verdict > 0:
            hi = mid
        elif verdict < 0:
            lo = mid
        else:
            break
    K_lo, _ = simulate(params, K0, lo, T)
    K_hi, _ = simulate(params, K0, hi, T)
    with np.errstate(invalid="ignore"):
        agree = np.abs(K_hi - K_lo) <= 1e-10 * ss.K
    certified = int(np.argmin(agree)) - 1 if not agree.all() else T
    c0 = 0.5 * (lo + hi)
    K, C = simulate(params, K0, c0, T)
    _, diverged = _classify(K, ss.K, direction)
    return ShootingResult(K, C, c0, certified, diverged)


def stitched_shooting(params: ModelParams, K0: float, T: int = 200, max_pieces: int = 50) -> ShootingResult:
    """Shooting over the whole horizon by restarting where each bracket stops agreeing.

    A single bisection pins the saddle path only until rounding in the initial
    consumption makes the bracketing paths split. Restarting a fresh
    bisection from the last certified capital stock extends the certified
    window; pieces are joined until ``T`` is covered or capital is within
    rounding of the steady state.
    """
    ss = solve_closed_form(params)
    K = np.full(T + 1, np.nan)
    C = np.full(T + 1, np.nan)
    t, k_start = 0, float(K0)
    c0 = None
    for _ in range(max_pieces):
        if abs(k_start / ss.K - 1.0) < 1e-12:
            K[t:] = ss.K
            C[t:] = ss.C
            t = T
            break
        piece = shooting_path(params, k_start, T=T - t)
        if c0 is None:
            c0 = piece.c0
        n = max(piece.certified, 1)
        K[t:t + n + 1] = piece.k_path[:n + 1]
        C[t:t + n + 1] = piece.c_path[:n + 1]
        t += n
        if t >= T:
            break
        k_start = float(K[t])
    return ShootingResult(K, C, c0 if c0 is not None else ss.C, t if t < T else T, None)
