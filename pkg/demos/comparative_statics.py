"""TFP elasticities and sweeps over returns to scale at two markups."""
import numpy as np

from scalecon import ModelParams
from scalecon.statics import dln_dkappa, dlnTFP_dlnphi, fd_check, grid, interior_minimum, sweep

p = ModelParams()
e = dlnTFP_dlnphi(p)
print(f"d ln TFP / d ln phi = {e.total:.6f} (allocative {e.allocative:+.6f}, technical {e.technical:+.6f})")
print(f"  finite difference check: rel error {fd_check(p, 'phi').rel_error:.1e}")
print(f"  constant returns: {dlnTFP_dlnphi(p.replace(nu=1.0)).total:.6f}")
print("d ln (Omega, Ahat) / d ln kappa =", tuple(round(v, 6) for v in dln_dkappa(p)))
print(f"d ln TFP / d ln nu (numerical) = {fd_check(p, 'nu').finite_difference:.4f}")

nus = grid(0.99, 1.05, 7)
for mu in (1.21, 1.28):
    t = sweep(ModelParams(mu=mu), "nu", nus)
    print(f"\nmu = {mu}")
    print(f"{'nu':>6} {'ln TFP':>9} {'ln Omega':>9} {'ln Ahat':>9}")
    for nu, a, b, c in zip(nus, t.column("ln_tfp"), t.column("ln_omega"), t.column("ln_ahat")):
        print(f"{nu:6.3f} {a:9.5f} {b:9.5f} {c:9.5f}")

fine = grid(0.9, 1.1, 401)
for mu in (1.21, 1.28):
    t = sweep(ModelParams(mu=mu, phi=0.135), "nu", fine)
    print(f"mu = {mu}: ln Omega minimised at nu = {interior_minimum(fine, t.column('ln_omega')):.4f}")
