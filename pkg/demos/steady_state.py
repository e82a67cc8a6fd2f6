"""Benchmark steady state: closed form against the numeric solve, plus the entry-cost bound."""
from scalecon import ModelParams, kappa_max, solve_closed_form, solve_numeric, validate
from scalecon.steady import STEADY_COLUMNS

p = ModelParams()
print(validate(p))
ss = solve_closed_form(p)
num, info = solve_numeric(p, full_output=True)
print(f"numeric solve: {info.iterations} iterations")
print(f"{'field':>6} {'closed form':>22} {'numeric':>22}")
for c in STEADY_COLUMNS:
    print(f"{c:>6} {getattr(ss, c):22.15g} {getattr(num, c):22.15g}")

km = kappa_max(p)
print(f"\nkappa_max = {km:.6g}; kappa = {p.kappa} leaves J = {ss.J:.4f} of draws inactive")
edge = solve_closed_form(p.replace(kappa=km))
print(f"at kappa = kappa_max the cutoff is {edge.Abar:.12f} and J = {edge.J:.1e}")
