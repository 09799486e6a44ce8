"""Build SU(N) generators and look at their structure constants.

For N = 3 the generators are the Gell-Mann matrices and the nonzero f_ijk
are f_123 = 1, six entries of size 1/2 and f_458 = f_678 = sqrt(3)/2.
"""

import numpy as np

from envprobe.sun_algebra import closure_residual, jacobi_residual, su_algebra

basis, f, d = su_algebra(3)
print("SU(3) structure constants f_ijk (canonical triples):")
for (i, j, k), v in sorted(f.items()):
    print(f"  f_{i}{j}{k} = {v:+.7f}")

print("\nnonzero symmetric constants d_ijk:", len(d.entries))
print("L_8 =")
print(np.round(basis[7].real, 4))

print("\nclosure ||[L_i, L_j] - 2i f_ijk L_k|| and Jacobi residuals:")
for n in range(2, 6):
    b, fn, _ = su_algebra(n)
    print(f"  N={n}: {b.size:2d} generators, closure {closure_residual(b, fn):.1e}, "
          f"Jacobi {jacobi_residual(fn):.1e}")
