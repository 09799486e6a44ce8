import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from envprobe.commutators import (EPS, JointOperators, addot_closed_form, adot_closed_form,
                                  beta_coefficient_map, cross, d_term, lift,
                                  nested_derivative_matrix, nested_derivative_stack,
                                  replacement_pattern_residual, tridot_closed_form,
                                  verify_double_commutator, verify_piecewise,
                                  verify_replacement_rules, verify_triple_commutator)
from envprobe.model import HamiltonianParams, worked_example_params
from envprobe.sun_algebra import PAULI, su_algebra


def test_worked_example_oracle_values():
    p = worked_example_params()
    basis = su_algebra(3)[0]
    m1, m2, m3 = nested_derivative_stack(p, basis, 3)
    assert np.allclose(m1, [[0, -3, 2], [3, 0, -1], [-2, 1, 0]], atol=1e-12)
    assert np.allclose(m2, [[-43 / 3, 2, 3], [2, -34 / 3, 6], [3, 6, -19 / 3]], atol=1e-12)
    assert np.allclose([m3[0, 1], m3[0, 2], m3[1, 2]], [158 / 3, -36, 18], atol=1e-12)


def test_single_term_oracle():
    # H = (w/2) S_3: a_1 = cos wt, so d a_1 / dt of the S_1 preparation vanishes
    # and the S_2 component grows at rate w
    p = HamiltonianParams(2, [0, 0, 2.0], np.zeros(3), np.zeros((3, 3)))
    m1 = nested_derivative_matrix(p, su_algebra(2)[0], 1)
    assert np.allclose(m1, [[0, -2, 0], [2, 0, 0], [0, 0, 0]])


def test_order_must_be_positive():
    with pytest.raises(ValueError):
        nested_derivative_matrix(worked_example_params(), su_algebra(3)[0], 0)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_closed_forms_match_oracle(n):
    basis, f, d = su_algebra(n)
    rng = np.random.default_rng(10 + n)
    for _ in range(10):
        p = HamiltonianParams.random(n, rng)
        exact = nested_derivative_stack(p, basis, 3)
        assert np.abs(adot_closed_form(p) - exact[0]).max() < 1e-10
        assert np.abs(addot_closed_form(p) - exact[1]).max() < 1e-10
        assert np.abs(tridot_closed_form(p, f, d) - exact[2]).max() < 1e-9


def test_d_term_vanishes_for_su2():
    _, _, d = su_algebra(2)
    assert not d_term(np.random.default_rng(0).normal(size=(3, 3)), d).any()


def test_beta_map_worked_example():
    p = worked_example_params()
    A = beta_coefficient_map(p.gamma, su_algebra(3)[1])
    # only beta_1..3 enter, through f_123 with the 2/N factor
    assert np.allclose(A[:, 3:], 0)
    assert np.linalg.matrix_rank(A) == 3
    assert np.allclose(np.abs(A[:, :3]), (2 / 3) * np.fliplr(np.eye(3)))


def test_cross_matches_numeric_cross():
    x, y = np.array([1.0, 2, 3]), np.array([-1.0, 0.5, 2])
    got = cross(lift(x, 1), lift(y, 1), EPS)[:, 0, 0]
    assert np.allclose(got, np.cross(x, y))


def test_pauli_commutator_as_cross_product():
    # [S_i, S_j] = 2i e_ijk S_k
    s = PAULI
    lhs = np.einsum("iab,jbc->ijac", s, s) - np.einsum("jab,ibc->ijac", s, s)
    rhs = 2j * np.einsum("ijk,kac->ijac", EPS, s)
    assert np.allclose(lhs, rhs)


@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6))
@settings(max_examples=25, deadline=None)
def test_replacement_pattern(values):
    assert replacement_pattern_residual(np.array(values[:3]), np.array(values[3:])) < 1e-10


@pytest.mark.parametrize("n", [2, 3])
def test_identity_verifiers(n):
    basis, f, _ = su_algebra(n)
    rng = np.random.default_rng(n)
    for _ in range(5):
        p = HamiltonianParams.random(n, rng)
        assert verify_double_commutator(p, basis, f) < 1e-10
        assert verify_triple_commutator(p, basis, f) < 1e-10
        assert max(verify_piecewise(p, basis, f)) < 1e-10
    assert verify_replacement_rules(basis, 5, 0, f) < 1e-10


def test_verifiers_detect_a_wrong_algebra():
    basis, f, _ = su_algebra(3)
    p = HamiltonianParams.random(3, np.random.default_rng(0))
    ops = JointOperators(p, basis, f)
    ops.f = -ops.f
    from envprobe.commutators import double_commutator_terms
    wrong = sum(double_commutator_terms(ops)) - ops.nested(2)
    assert np.abs(wrong).max() > 1e-3


def test_zero_params_give_zero_residual():
    basis, f, _ = su_algebra(2)
    p = HamiltonianParams.zeros(2)
    assert verify_double_commutator(p, basis, f) == 0.0
    assert verify_triple_commutator(p, basis, f) == 0.0
