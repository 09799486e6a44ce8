"""Derivative matrices at t = 0 for the worked N = 3 example.

Each matrix is computed twice: by nested commutators i[H, .] on the joint
space and by the closed forms.  The coupling terms carry a factor 2/N from
tracing over the fully mixed environment, so for N = 3 the second-order
diagonal reads -43/3, -34/3, -19/3.
"""

from fractions import Fraction

import numpy as np

from envprobe.commutators import (addot_closed_form, adot_closed_form,
                                  nested_derivative_stack, tridot_closed_form)
from envprobe.model import worked_example_params
from envprobe.sun_algebra import su_algebra


def show(name, m):
    print(name)
    for row in m:
        print("   ", "  ".join(f"{str(Fraction(x).limit_denominator(100)):>7}" for x in row))


basis, f, d = su_algebra(3)
p = worked_example_params()
oracle = nested_derivative_stack(p, basis, 4)

show("first derivatives (nested commutators)", oracle[0])
show("second derivatives", oracle[1])
show("third derivatives", oracle[2])

closed = [adot_closed_form(p), addot_closed_form(p), tridot_closed_form(p, f, d)]
for order, (a, b) in enumerate(zip(oracle, closed), start=1):
    print(f"order {order}: closed form vs oracle, max difference {np.abs(a - b).max():.1e}")

# odd orders antisymmetric, even orders symmetric
for order, m in enumerate(oracle, start=1):
    sign = -1 if order % 2 else 1
    print(f"order {order}: parity defect {np.abs(m - sign * m.T).max():.1e}")
