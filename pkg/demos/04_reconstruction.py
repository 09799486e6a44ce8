"""End-to-end reconstruction of the worked example.

Simulate the nine Bloch functions with dt = 1e-3, estimate derivatives up
to fifth order, invert orders 1-3 in closed form, refine with the
multi-order fit, then re-simulate and compare over 500 steps.  The
residual curves are written to ``residuals.csv`` in the working directory.
"""

import numpy as np

from envprobe.dynamics import Trajectory, simulate_trajectory
from envprobe.model import worked_example_params
from envprobe.reconstruction import reconstruct_trajectory
from envprobe.sun_algebra import su_algebra

p = worked_example_params()
basis = su_algebra(3)[0]
dt, steps = 1e-3, 500

measured = simulate_trajectory(p, basis, dt, steps, 100)
result = reconstruct_trajectory(measured, max_order=5, stencil_halfwidth=5, stride=20)
print(result.report.summary())
print(f"\nfit: {result.fit.message}, {result.fit.iterations} iterations, "
      f"objective {result.fit.history[0]:.2e} -> {result.fit.objective:.2e}")
print("fitted beta:", np.round(result.params.beta, 4))

truth = simulate_trajectory(p, basis, dt, steps)
for label, est in (("closed form", result.report.params), ("fit", result.params)):
    resid = np.abs(truth.values - simulate_trajectory(est, basis, dt, steps).values)
    print(f"max residual over {steps} steps, {label}: {resid.max():.2e}")

resid = np.abs(truth.values - simulate_trajectory(result.params, basis, dt, steps).values)
Trajectory(truth.times, resid, dt, 3).to_csv("residuals.csv")
print("wrote residuals.csv")
