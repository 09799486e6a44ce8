"""How well finite differences recover the derivative matrices.

The minimal central stencils are second order, so halving dt cuts the
error by about 4.  Orders four and five need wider, spaced-out stencils:
rounding error grows like eps / h**m, so the points are placed ``stride``
samples apart.
"""

import numpy as np

from envprobe.commutators import nested_derivative_stack
from envprobe.derivatives import estimate_derivatives
from envprobe.dynamics import simulate_trajectory
from envprobe.model import worked_example_params
from envprobe.sun_algebra import su_algebra

p = worked_example_params()
basis = su_algebra(3)[0]
exact = nested_derivative_stack(p, basis, 5)

print("minimal stencils, max error per order")
prev = None
for dt in (0.02, 0.01, 0.005, 0.0025):
    tr = simulate_trajectory(p, basis, dt, 3, 3)
    err = np.abs(estimate_derivatives(tr, 3).mats - exact[:3]).max(axis=(1, 2))
    ratio = "" if prev is None else "  ratio " + " ".join(f"{r:.2f}" for r in prev / err)
    print(f"  dt={dt:<7} " + " ".join(f"{e:.2e}" for e in err) + ratio)
    prev = err

print("\nhalfwidth 5 on dt = 1e-3 data, relative error per order")
tr = simulate_trajectory(p, basis, 1e-3, 500, 100)
for stride in (1, 5, 20):
    est = estimate_derivatives(tr, 5, 5, stride=stride)
    rel = np.abs(est.mats - exact).max(axis=(1, 2)) / np.abs(exact).max(axis=(1, 2))
    print(f"  stride {stride:2d}: " + " ".join(f"{r:.1e}" for r in rel))
