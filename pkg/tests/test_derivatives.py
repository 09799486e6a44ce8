import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from envprobe.commutators import nested_derivative_stack
from envprobe.derivatives import (DerivativeStack, accuracy_order, estimate_derivatives,
                                  stencil_weights, symmetry_defect, symmetry_project)
from envprobe.dynamics import Trajectory, simulate_trajectory
from envprobe.errors import (AlreadyProjectedError, InsufficientSamplesError,
                             NonUniformGridError)
from envprobe.model import HamiltonianParams, worked_example_params
from envprobe.sun_algebra import su_algebra


def test_classic_stencils():
    assert np.allclose(stencil_weights([-1, 0, 1], 1), [-0.5, 0, 0.5])
    assert np.allclose(stencil_weights([-1, 0, 1], 2), [1, -2, 1])
    assert np.allclose(stencil_weights([-2, -1, 0, 1, 2], 3), [-0.5, 1, 0, -1, 0.5])
    assert np.allclose(stencil_weights([0, 1, 2], 1), [-1.5, 2, -0.5])


def test_stencil_needs_enough_points():
    with pytest.raises(ValueError):
        stencil_weights([-1, 0, 1], 3)


@given(st.integers(1, 4), st.integers(0, 3))
@settings(max_examples=30, deadline=None)
def test_stencil_exact_on_polynomials(order, extra):
    p = (order + 1) // 2 + extra
    offsets = np.arange(-p, p + 1)
    w = stencil_weights(offsets, order)
    # exact for x^order, zero for lower powers
    assert np.isclose(w @ offsets.astype(float) ** order, math.factorial(order))
    for power in range(order):
        assert abs(w @ offsets.astype(float) ** power) < 1e-9


def test_accuracy_order():
    assert accuracy_order(1, None) == 2
    assert accuracy_order(3, None) == 2
    assert accuracy_order(1, 5) == 10
    assert accuracy_order(5, 5) == 6
    with pytest.raises(ValueError):
        accuracy_order(5, 2)


def _setup(dt, fwd, back, n=3, seed=None):
    p = worked_example_params() if seed is None else HamiltonianParams.random(
        n, np.random.default_rng(seed))
    basis = su_algebra(p.n)[0]
    return p, basis, simulate_trajectory(p, basis, dt, fwd, back)


def test_default_stencils_converge_at_second_order():
    p, basis, _ = _setup(0.01, 1, 1)
    exact = nested_derivative_stack(p, basis, 3)
    errs = []
    for dt in (0.02, 0.01):
        tr = simulate_trajectory(p, basis, dt, 3, 3)
        errs.append(np.abs(estimate_derivatives(tr, 3).mats - exact).max(axis=(1, 2)))
    ratio = errs[0] / errs[1]
    assert np.all((ratio > 3.5) & (ratio < 4.5))


def test_wide_stencil_with_stride_is_accurate():
    p, basis, tr = _setup(1e-3, 100, 100)
    exact = nested_derivative_stack(p, basis, 5)
    est = estimate_derivatives(tr, 5, 5, stride=20)
    rel = np.abs(est.mats - exact).max(axis=(1, 2)) / np.abs(exact).max(axis=(1, 2))
    assert rel.max() < 1e-5


def test_one_sided_fallback():
    p, basis, tr = _setup(1e-3, 40, 0)
    exact = nested_derivative_stack(p, basis, 1)[0]
    est = estimate_derivatives(tr, 1, 2, stride=4)
    assert np.abs(est[1] - exact).max() < 1e-4


def test_central_estimates_have_exact_parity():
    _, _, tr = _setup(0.01, 6, 6, seed=3)
    est = estimate_derivatives(tr, 4, 3)
    # only rounding survives, and it grows like eps / h^m
    bound = 100 * np.finfo(float).eps / 0.01 ** np.arange(1, 5)
    assert np.all(symmetry_defect(est) < bound)


def test_one_sided_estimates_break_parity():
    _, _, tr = _setup(0.01, 12, 0, seed=3)
    assert symmetry_defect(estimate_derivatives(tr, 2)).max() > 1e-6


def test_missing_window_is_named():
    _, _, tr = _setup(1e-3, 30, 10)
    with pytest.raises(InsufficientSamplesError, match=r"missing k = -40 \.\. 40"):
        estimate_derivatives(tr, 3, 2, stride=20, one_sided=False)


def test_non_uniform_grid():
    tr = Trajectory(np.array([0.0, 0.1, 0.25]), np.zeros((3, 3, 3)), 0.1, 2)
    with pytest.raises(NonUniformGridError):
        estimate_derivatives(tr, 1)


def test_symmetry_project():
    rng = np.random.default_rng(0)
    stack = DerivativeStack(rng.normal(size=(4, 3, 3)))
    proj = symmetry_project(stack)
    assert np.allclose(proj[1], -proj[1].T) and np.allclose(proj[2], proj[2].T)
    assert np.allclose(proj[3], -proj[3].T) and np.allclose(proj[4], proj[4].T)
    assert proj.projected
    with pytest.raises(AlreadyProjectedError):
        symmetry_project(proj)


def test_stack_indexing_and_serialisation(tmp_path):
    stack = DerivativeStack(np.arange(18.0).reshape(2, 3, 3), projected=True)
    assert stack.order == 2
    assert stack[2][0, 0] == 9.0
    with pytest.raises(IndexError):
        stack[3]
    path = tmp_path / "s.json"
    stack.save(path)
    back = DerivativeStack.load(path)
    assert np.array_equal(back.mats, stack.mats) and back.projected
    assert stack.truncate(1).order == 1


def test_bad_orders():
    _, _, tr = _setup(0.01, 3, 3)
    with pytest.raises(ValueError):
        estimate_derivatives(tr, 0)
    with pytest.raises(ValueError):
        estimate_derivatives(tr, 1, stride=0)


def test_pure_precession_first_derivative():
    w = 1.7
    p = HamiltonianParams(2, [0, 0, w], np.zeros(3), np.zeros((3, 3)))
    tr = simulate_trajectory(p, su_algebra(2)[0], 1e-3, 3, 3)
    est = estimate_derivatives(tr, 1, 3)
    assert np.abs(est[1] - [[0, -w, 0], [w, 0, 0], [0, 0, 0]]).max() < 1e-6 * w
