"""Sampled firm panel at the benchmark steady state and the aggregation checks."""
import numpy as np

from scalecon import ModelParams, solve_closed_form
from scalecon.firms import aggregation_check, firm_panel, overhead_labour_experiment, quadrature_panel
from scalecon.pareto import sample_panel

p = ModelParams()
ss = solve_closed_form(p)

draws = sample_panel(200_000, 12345, p, ss.Abar)
firms = firm_panel(draws.a, ss, p, j=draws.j)
act = firms.active
print(f"active share {act.mean():.4f} (1 - J = {1 - ss.J:.4f})")
q = np.quantile(firms.s[act], [0.0, 0.5, 0.9, 0.99, 1.0])
print("scale economies among active firms (min, median, p90, p99, max):", np.round(q, 5))
print(f"bounds: nu = {p.nu}, mu = {p.mu}")

quad = aggregation_check(quadrature_panel(ss.J, p), ss, p)
mc = aggregation_check(sample_panel(10 ** 6, 7, p, ss.Abar), ss, p)
print(f"\n{'identity':>13} {'quadrature':>12} {'monte carlo':>12} {'3 se':>9}")
for k, v in quad.as_dict().items():
    print(f"{k:>13} {v:12.2e} {mc.as_dict()[k]:12.2e} {3 * mc.standard_errors[k]:9.2e}")

for ltot in (10.0, 40.0):
    e = overhead_labour_experiment(ltot, 9.0)
    print(f"\nl_tot = {ltot:g}, overhead 9: production labour {e['before']:g} -> {e['after']:g} "
          f"({e['pct_change']:+.1f}%) after a 10% rise in total labour")
