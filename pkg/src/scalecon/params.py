"""Parameter vector, model assumptions and closed-form constants of the Pareto model.

Every quantity here is per unit of aggregate labour (labour supply is one).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import AssumptionViolation, MalformedInputError

PARAM_KEYS = ("sigma", "beta", "delta", "alpha", "nu", "mu", "phi", "kappa", "theta")


@dataclass(frozen=True)
class ModelParams:
    """Structural parameters.

    Defaults are the comparative-statics benchmark: mid-points of the
    returns-to-scale (0.99-1.05) and markup (1.21-1.28) ranges, with the
    remaining values from the calibration table. ``sigma`` is not pinned down
    by the calibration and defaults to log utility; it only affects transition
    speed. The Pareto scale ``h`` is a normalisation and fixed at one.
    """

    sigma: float = 1.0
    beta: float = 0.96
    delta: float = 0.08
    alpha: float = 0.25
    nu: float = 1.02
    mu: float = 1.245
    phi: float = 0.85
    kappa: float = 0.017
    theta: float = 10.0

    @property
    def h(self) -> float:
        return 1.0

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in PARAM_KEYS}


@dataclass(frozen=True)
class Violation:
    assumption: str
    condition: str
    margin: float  # signed amount by which the inequality is missed

    def __str__(self) -> str:
        return f"{self.assumption}: {self.condition} fails (margin {self.margin:.6g})"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __iter__(self):
        return iter(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    def names(self) -> list[str]:
        return [v.assumption for v in self.violations]

    def conditions(self) -> list[str]:
        return [v.condition for v in self.violations]

    def __str__(self) -> str:
        if self.ok:
            return "all assumptions hold"
        return "; ".join(str(v) for v in self.violations)


def check_well_formed(params: ModelParams) -> None:
    bad = []
    for key in PARAM_KEYS:
        value = getattr(params, key)
        if not isinstance(value, (int, float, np.floating)) or not math.isfinite(value) or value <= 0:
            bad.append(f"{key}={value!r}")
    if bad:
        raise MalformedInputError("parameters must be finite and positive: " + ", ".join(bad))


BOUNDARY_TOL = 1e-12


def validate(params: ModelParams, include_entry_bound: bool = True) -> ValidationReport:
    """Check every assumption strictly and list all violations.

    Strict inequalities must hold with a relative margin of ``BOUNDARY_TOL``.

    Raises MalformedInputError for non-finite or non-positive fields; those are
    input errors rather than assumption violations. The entry-cost bound is
    only tested when every other assumption holds, because ``kappa_max`` is
    undefined outside that region.
    """
    check_well_formed(params)
    p = params
    out: list[Violation] = []

    def need(assumption: str, condition: str, lhs: float, rhs: float, strict: bool = True) -> None:
        # a strict inequality that holds only to rounding leaves the closed forms
        # with no significant digits, so it counts as violated
        holds = lhs < rhs - BOUNDARY_TOL * max(1.0, abs(rhs)) if strict else lhs <= rhs
        if not holds:
            out.append(Violation(assumption, condition, lhs - rhs))

    need("parameter range", "beta < 1", p.beta, 1.0)
    need("parameter range", "delta < 1", p.delta, 1.0)
    need("parameter range", "alpha < 1", p.alpha, 1.0)
    need("parameter range", "mu >= 1", 1.0, p.mu, strict=False)
    need("parameter range", "theta > 1", 1.0, p.theta)
    need("Assumption 1", "nu < mu", p.nu, p.mu)
    need("Assumption 1", "nu < 1/alpha", p.nu, 1.0 / p.alpha)
    need("Assumption 2", "theta*(mu - nu) > 1", 1.0, p.theta * (p.mu - p.nu))
    need("Assumption 2", "theta*(1 - alpha*nu) > 1", 1.0, p.theta * (1.0 - p.alpha * p.nu))

    if include_entry_bound and not out:
        need("entry-cost bound", "kappa <= kappa_max", p.kappa, kappa_max(p), strict=False)
    return ValidationReport(out)


def require_valid(params: ModelParams, include_entry_bound: bool = True) -> None:
    report = validate(params, include_entry_bound=include_entry_bound)
    if not report.ok:
        raise AssumptionViolation(report)


def rental_rate(beta: float, delta: float) -> float:
    """Steady-state rental rate from the Euler equation, 1/beta - (1 - delta)."""
    return 1.0 / beta - (1.0 - delta)


def gamma_constant(theta: float, mu: float, nu: float) -> float:
    """Unconditional (mu - nu)-power mean of Pareto technology with scale one."""
    s = theta * (mu - nu)
    return (s / (s - 1.0)) ** (mu - nu)


def one_minus_u(params: ModelParams) -> float:
    """Overhead share of labour, (theta(mu-nu) - 1) / (theta(mu - alpha nu) - 1)."""
    p = params
    return (p.theta * (p.mu - p.nu) - 1.0) / (p.theta * (p.mu - p.alpha * p.nu) - 1.0)


def production_share_inverse_form(params: ModelParams) -> float:
    """u written as [1 + (theta(mu-nu) - 1) / (nu theta (1-alpha))]^-1."""
    p = params
    return 1.0 / (1.0 + (p.theta * (p.mu - p.nu) - 1.0) / (p.nu * p.theta * (1.0 - p.alpha)))


def u_derivatives(params: ModelParams) -> dict[str, float]:
    """Closed-form partial derivatives of u with respect to phi, nu and mu."""
    p = params
    denom = (p.theta * (p.mu - p.alpha * p.nu) - 1.0) ** 2
    return {
        "phi": 0.0,
        "nu": (1.0 - p.alpha) * p.theta * (p.theta * p.mu - 1.0) / denom,
        "mu": -(1.0 - p.alpha) * p.theta ** 2 * p.nu / denom,
    }


@dataclass(frozen=True)
class DerivedConstants:
    gamma: float
    u: float
    n_firms: float
    s_l: float
    omega: float
    psi: float
    r_ss: float


def derived_constants(params: ModelParams) -> DerivedConstants:
    require_valid(params, include_entry_bound=False)
    p = params
    gamma = gamma_constant(p.theta, p.mu, p.nu)
    om_u = one_minus_u(p)
    u = 1.0 - om_u
    n_firms = om_u / p.phi
    s_l = (p.mu - p.alpha * p.nu - 1.0 / p.theta) / p.mu
    omega = n_firms ** (1.0 - p.nu) * u ** ((1.0 - p.alpha) * p.nu)
    psi = (
        p.phi / (p.kappa * (p.theta * (p.mu - p.nu) - 1.0))
        * (1.0 - p.alpha) * p.nu / p.mu * omega * gamma / u
    ) ** (1.0 / (p.theta - 1.0))
    return DerivedConstants(
        gamma=gamma, u=u, n_firms=n_firms, s_l=s_l, omega=omega, psi=psi,
        r_ss=rental_rate(p.beta, p.delta),
    )


def _log_entry_bracket(p: ModelParams) -> float:
    # log of the bracket shared by the cutoff formula and the entry-cost bound,
    # excluding the kappa term
    r = rental_rate(p.beta, p.delta)
    an = p.alpha * p.nu
    return (
        p.nu * math.log(p.nu)
        - math.log(p.mu)
        + an * math.log(p.alpha / r)
        + p.nu * (1.0 - p.alpha) * math.log(p.phi * (1.0 - p.alpha))
        + (p.mu - 1.0) * math.log(p.theta)
        + (p.mu - p.nu) * math.log(p.mu - p.nu)
        - (p.mu - an) * math.log(p.theta * (p.mu - p.nu) - 1.0)
    )


def kappa_max(params: ModelParams) -> float:
    """Largest entry cost for which the steady-state cutoff is at least one.

    ``params.kappa`` is ignored. At equality every entrant is active.
    """
    require_valid(params, include_entry_bound=False)
    return math.exp(_log_entry_bracket(params) / (1.0 - params.alpha * params.nu))


def threshold_closed_form(params: ModelParams) -> float:
    """Steady-state cutoff technology from the direct closed form (may be < 1)."""
    p = params
    an = p.alpha * p.nu
    log_b = _log_entry_bracket(p) - (1.0 - an) * math.log(p.kappa)
    return math.exp(log_b / (p.theta * (1.0 - an) - 1.0))


def sample_valid_params(rng: np.random.Generator, **fixed: float) -> ModelParams:
    """Draw a parameter vector that satisfies every assumption with some slack.

    Keyword arguments pin individual fields. Used by property tests and the
    self-test; the sampling box is wide but not exhaustive.
    """
    for _ in range(1000):
        draw = {
            "sigma": rng.uniform(0.5, 3.0),
            "beta": rng.uniform(0.90, 0.99),
            "delta": rng.uniform(0.03, 0.12),
            "alpha": rng.uniform(0.15, 0.40),
            "nu": rng.uniform(0.90, 1.10),
            "phi": math.exp(rng.uniform(math.log(0.05), math.log(1.5))),
        }
        draw.update({k: v for k, v in fixed.items() if k in draw})
        mu = fixed.get("mu", max(1.0, draw["nu"]) + rng.uniform(0.05, 0.40))
        an = draw["alpha"] * draw["nu"]
        if mu <= draw["nu"] or an >= 1:
            continue
        lower = max(1.0 / (mu - draw["nu"]), 1.0 / (1.0 - an), 1.0)
        theta = fixed.get("theta", lower * rng.uniform(1.2, 3.0))
        p = ModelParams(mu=mu, theta=theta, kappa=1.0, **draw)
        if not validate(p, include_entry_bound=False).ok:
            continue
        kappa = fixed.get("kappa", kappa_max(p) * rng.uniform(0.05, 0.95))
        p = p.replace(kappa=kappa)
        if validate(p).ok:
            return p
    raise RuntimeError("could not draw a valid parameter vector with the given constraints")


# config files ----------------------------------------------------------------

def parse_key_values(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment, blank lines skipped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MalformedInputError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise MalformedInputError(f"{source}:{lineno}: empty key")
        if key in out:
            raise MalformedInputError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def params_from_mapping(values: Mapping[str, object], base: ModelParams | None = None,
                        source: str = "<config>") -> ModelParams:
    unknown = sorted(set(values) - set(PARAM_KEYS))
    if unknown:
        raise MalformedInputError(f"{source}: unknown parameter key(s): {', '.join(unknown)}")
    parsed = {}
    for key, value in values.items():
        try:
            parsed[key] = float(value)
        except (TypeError, ValueError):
            raise MalformedInputError(f"{source}: {key} = {value!r} is not a number") from None
    return (base or ModelParams()).replace(**parsed)


def parse_overrides(items: Iterable[str]) -> dict[str, str]:
    """Turn ``["nu=1.03", "phi=0.2"]`` into a dict, rejecting malformed items."""
    out = {}
    for item in items:
        if "=" not in item:
            raise MalformedInputError(f"override {item!r} is not of the form key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        out[key] = value
    return out


def load_params(path: str | Path | None = None, overrides: Iterable[str] = (),
                base: ModelParams | None = None) -> ModelParams:
    """Read a parameter file, then apply ``key=value`` overrides.

    Missing keys keep their benchmark defaults. Validation is left to the caller.
    """
    values: dict[str, str] = {}
    if path is not None:
        path = Path(path)
        values = parse_key_values(path.read_text(encoding="utf-8"), source=str(path))
    params = params_from_mapping(values, base=base, source=str(path or "<defaults>"))
    over = parse_overrides(overrides)
    if over:
        params = params_from_mapping(over, base=params, source="--set")
    return params


def format_params(params: ModelParams) -> str:
    return "".join(f"{k} = {getattr(params, k)!r}\n" for k in PARAM_KEYS)
