"""Pareto technology draws, scaled-technology moments and the active-firm power mean.

Technology is drawn by inverse transform, ``A(j) = (1 - j)**(-1/theta)`` with
``j`` uniform on [0, 1) and the scale fixed at one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DivergentMomentError, DomainError
from .params import ModelParams, gamma_constant

# largest double below one; draws are truncated here
J_MAX = 1.0 - 2.0 ** -53
BLOCK_SIZE = 1 << 16


def quantile(j, theta):
    """Technology level at uniform draw ``j``."""
    j = np.asarray(j, dtype=float)
    if np.any(j >= 1.0) or np.any(j < 0.0):
        raise DomainError("uniform draw must lie in [0, 1); j >= 1 gives unbounded technology")
    if theta <= 1:
        raise DomainError(f"Pareto shape must exceed 1, got {theta}")
    out = (1.0 - j) ** (-1.0 / theta)
    return out.item() if out.ndim == 0 else out


def cdf(a, theta):
    """Pareto CDF with unit scale."""
    a = np.asarray(a, dtype=float)
    out = np.where(a >= 1.0, 1.0 - a ** (-theta), 0.0)
    return out.item() if out.ndim == 0 else out


def scaled_shape(params: ModelParams) -> float:
    """Shape of scaled technology ``A**(1/(mu-nu))``, which is again Pareto."""
    return params.theta * (params.mu - params.nu)


def _check_moment(params: ModelParams) -> float:
    s = scaled_shape(params)
    if not s > 1.0:
        raise DivergentMomentError(
            f"theta*(mu - nu) = {s!r} <= 1: scaled technology has no finite mean"
        )
    return s


def gamma(params: ModelParams) -> float:
    _check_moment(params)
    return gamma_constant(params.theta, params.mu, params.nu)


def threshold_from_cutoff(J: float, theta: float) -> float:
    return (1.0 - J) ** (-1.0 / theta)


def cutoff_from_threshold(abar: float, theta: float) -> float:
    return 1.0 - abar ** (-theta)


def power_mean(J: float, params: ModelParams, method: str = "closed") -> float:
    """(mu - nu)-power mean of technology over draws above the cutoff ``J``.

    ``method="closed"`` uses the Pareto result ``Gamma * Abar``.
    ``method="quadrature"`` integrates ``A(j)**(1/(mu-nu))`` over (J, 1)
    numerically and is the independent check on the closed form.
    """
    if not 0.0 <= J < 1.0:
        raise DomainError(f"cutoff draw must lie in [0, 1), got {J}")
    _check_moment(params)
    if method == "closed":
        return gamma(params) * threshold_from_cutoff(J, params.theta)
    if method == "quadrature":
        return _power_mean_quadrature(J, params)
    raise ValueError(f"unknown method {method!r}")


def _power_mean_quadrature(J: float, params: ModelParams) -> float:
    # t = (1-j)**(1-p) with p = 1/(theta(mu-nu)) maps (J,1) onto (0, t_J) and
    # cancels the integrable endpoint singularity at j = 1.
    m = params.mu - params.nu
    p = 1.0 / scaled_shape(params)
    q = 1.0 - p
    t_J = (1.0 - J) ** q

    def integrand(t):
        one_minus_j = t ** (1.0 / q)
        a = one_minus_j ** (-1.0 / params.theta)
        jac = t ** (p / q) / q
        return a ** (1.0 / m) * jac

    value, _ = integrate.quad(integrand, 0.0, t_J, epsabs=1e-12, epsrel=1e-13, limit=200)
    return (value / (1.0 - J)) ** m


def power_mean_density_quadrature(abar: float, params: ModelParams) -> float:
    """Same power mean computed over the Pareto density in technology space."""
    _check_moment(params)
    m = params.mu - params.nu
    th = params.theta

    def integrand(a):
        return a ** (1.0 / m) * th * a ** (-th - 1.0)

    value, _ = integrate.quad(integrand, abar, np.inf, epsabs=1e-14, epsrel=1e-13, limit=400)
    return (value / abar ** (-th)) ** m


@dataclass(frozen=True)
class TechDraw:
    j: float
    a: float
    active: bool


@dataclass
class TechPanel:
    """Array-backed panel of draws; indexing yields TechDraw records."""

    j: np.ndarray
    a: np.ndarray
    active: np.ndarray
    abar: float

    def __len__(self) -> int:
        return len(self.j)

    def __getitem__(self, i) -> TechDraw:
        return TechDraw(float(self.j[i]), float(self.a[i]), bool(self.active[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def empirical_power_mean(self, params: ModelParams) -> tuple[float, float]:
        """Sample power mean over active draws and its delta-method standard error."""
        m = params.mu - params.nu
        x = self.a[self.active] ** (1.0 / m)
        mean = float(x.mean())
        se_mean = float(x.std(ddof=1) / np.sqrt(x.size))
        return mean ** m, m * mean ** (m - 1.0) * se_mean


def _block_generator(seed: int, block: int) -> np.random.Generator:
    # block b of the draw stream: Philox keyed by SeedSequence(seed, spawn_key=(b,))
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(block,))
    return np.random.Generator(np.random.Philox(ss))


def uniform_draws(seed: int, start: int, stop: int) -> np.ndarray:
    """Uniform draws with global indices [start, stop) of the stream for ``seed``.

    The stream is cut into blocks of ``BLOCK_SIZE``; block ``b`` comes from a
    Philox generator keyed by ``SeedSequence(seed, spawn_key=(b,))``. Any
    partition of the index range therefore reproduces the serial stream.
    """
    if start < 0 or stop < start:
        raise ValueError("need 0 <= start <= stop")
    seed = int(seed) & ((1 << 64) - 1)
    first, last = start // BLOCK_SIZE, (stop - 1) // BLOCK_SIZE if stop > start else -1
    chunks = []
    for b in range(first, last + 1):
        block = _block_generator(seed, b).random(BLOCK_SIZE)
        lo = max(start - b * BLOCK_SIZE, 0)
        hi = min(stop - b * BLOCK_SIZE, BLOCK_SIZE)
        chunks.append(block[lo:hi])
    out = np.concatenate(chunks) if chunks else np.empty(0)
    return np.minimum(out, J_MAX)


def sample_panel(n: int, seed: int, params: ModelParams, abar: float,
                 start: int = 0) -> TechPanel:
    """Draw ``n`` firms; a firm is active when its technology is at least ``abar``."""
    if n < 1:
        raise ValueError("need at least one draw")
    if abar < 1.0:
        raise DomainError(f"threshold technology must be >= 1, got {abar}")
    j = uniform_draws(seed, start, start + n)
    a = (1.0 - j) ** (-1.0 / params.theta)
    return TechPanel(j=j, a=a, active=a >= abar, abar=abar)
