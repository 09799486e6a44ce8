"""What the data can and cannot pin down.

Rotating the generator basis (with beta and gamma rotated to match) leaves
H unchanged.  Orders one and two only see the Gram matrix of gamma, and
order three fixes at most three combinations of beta; the rest must come
from higher orders.  The number of orders needed scales like N^2.
"""

import numpy as np
from scipy.stats import ortho_group

from envprobe.commutators import beta_coefficient_map, nested_derivative_stack
from envprobe.derivatives import DerivativeStack
from envprobe.model import HamiltonianParams, apply_gauge, assemble_hamiltonian
from envprobe.reconstruction import reconstruct, required_order
from envprobe.sun_algebra import su_algebra

basis, f, d = su_algebra(3)
rng = np.random.default_rng(1)
p = HamiltonianParams.random(3, rng)
r = ortho_group.rvs(8, random_state=2)
p2, b2 = apply_gauge(p, basis, r)
print("H difference after a basis rotation:",
      f"{np.abs(assemble_hamiltonian(p2, b2) - assemble_hamiltonian(p, basis)).max():.1e}")

stack = DerivativeStack(nested_derivative_stack(p, basis, 3), projected=True)
rep = reconstruct(stack, 3, f, d, basis)
print("\ncanonical gamma (first three columns):")
print(np.round(rep.gamma_canonical[:, :3], 4))
print("beta identifiable rank at third order:", rep.beta_identifiable_rank, "of 8")
print("singular values of the beta map:", np.round(rep.singular_values, 4))
print("re-predicted orders 1-3, residual:", f"{rep.residuals.max():.1e}")

# a single coupling direction leaves beta invisible at this order
gamma = np.zeros((3, 8))
gamma[2, 0] = 1.0
print("\nrank with one coupling row:", np.linalg.matrix_rank(beta_coefficient_map(gamma, f)))

print("\nderivative order needed for 4N^2 - 1 unknowns at ~4.5 equations per order:")
for n in (2, 3, 4, 10):
    print(f"  N={n:2d}: {required_order(n)}")
