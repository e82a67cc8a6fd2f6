"""Overhead cost from a 10% inactive share, discount-factor conventions and the Pareto shape series."""
from scalecon import ModelParams
from scalecon.calibration import beta_diagnostic, calibrate, theta_series, window_mean
from scalecon.series import synthetic_series

report = calibrate(ModelParams())
for line in report.lines():
    print(line)

d = beta_diagnostic(ModelParams())
print(f"\nbeta {d.beta_used} gives rental rate {d.implied_rental:.4f}; the 2.08% target gives beta {d.beta_net:.4f}")

series = synthetic_series()
for phi in (0.85, 0.135):
    est = theta_series(series, phi=phi, alpha=0.25)
    print(f"theta from firms per worker, phi = {phi}: 2001-04 mean {window_mean(est, 2001, 2004):.2f}, "
          f"2011-14 mean {window_mean(est, 2011, 2014):.2f}")
