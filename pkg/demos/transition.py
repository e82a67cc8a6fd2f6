"""Saddle path from 90% of steady-state capital, and a permanent rise in returns to scale."""
import time

import numpy as np

from scalecon import ModelParams, solve_closed_form
from scalecon.transition import permanent_change, solve_transition, stitched_shooting

p = ModelParams()
ss = solve_closed_form(p)
t0 = time.perf_counter()
path = solve_transition(p, 0.9 * ss.K)
dt = time.perf_counter() - t0
shot = stitched_shooting(p, 0.9 * ss.K, T=path.T)
print(f"stacked Newton: T = {path.T}, {path.iterations} iterations, {dt * 1e3:.1f} ms, "
      f"max residual {path.max_residual:.1e}")
print(f"largest gap to the shooting solution {np.max(np.abs(shot.k_path / path.k_path - 1)):.1e}")
for t in (0, 1, 5, 10, 25, 50, 100):
    print(f"t = {t:3d}  K/K_ss = {path.k_path[t] / ss.K:.6f}  C/C_ss = {path.c_path[t] / ss.C:.6f}  "
          f"TFP = {path.block.TFP[t]:.6f}")

new = p.replace(nu=1.03)
move = permanent_change(p, new)
ss_new = solve_closed_form(new)
print(f"\nnu 1.02 -> 1.03: K goes {move.k_path[0]:.4f} -> {move.k_path[-1]:.4f} "
      f"(new steady state {ss_new.K:.4f})")
