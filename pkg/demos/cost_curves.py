"""Firm cost curves for decreasing, constant and increasing returns in variable inputs."""
import numpy as np

from scalecon import ModelParams, solve_closed_form
from scalecon.firms import cost_curves, default_output_grid, firm_policy, min_efficient_scale

for nu in (0.95, 1.0, 1.04):
    p = ModelParams(nu=nu)
    ss = solve_closed_form(p)
    y0 = firm_policy(ss.Abar, ss, p).y
    c = cost_curves(ss.Abar, default_output_grid(y0, n=7, lo=1e-2, hi=1e2), ss.r, ss.w, p)
    print(f"nu = {nu}: minimum efficient scale {min_efficient_scale(ss.Abar, ss.r, ss.w, p):.4g}")
    print(f"{'y':>11} {'ATC':>11} {'MC':>11} {'S':>8}")
    for y, atc, mc, s in zip(c.y, c.atc, c.mc, c.s):
        print(f"{y:11.4g} {atc:11.4g} {mc:11.4g} {s:8.4f}")
    print("MC", "rising" if np.all(np.diff(c.mc) > 0) else "flat" if np.allclose(np.diff(c.mc), 0) else "falling")
    print()
