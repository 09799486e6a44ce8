import numpy as np
import pytest

from envprobe.commutators import (addot_closed_form, beta_coefficient_map,
                                  nested_derivative_stack, tridot_closed_form)
from envprobe.derivatives import DerivativeStack
from envprobe.dynamics import simulate_trajectory
from envprobe.errors import NonPhysicalDerivativesError, SymmetryError
from envprobe.model import HamiltonianParams, apply_gauge, gamma_gram, worked_example_params
from envprobe.reconstruction import (ReconstructionReport, canonicalize_gamma, extract_alpha,
                                     extract_beta, extract_gamma_gram, fit_parameters,
                                     pivoted_cholesky, reconstruct, reconstruct_trajectory,
                                     required_order)
from envprobe.sun_algebra import su_algebra


def _exact_stack(p, order=3):
    basis = su_algebra(p.n)[0]
    return DerivativeStack(nested_derivative_stack(p, basis, order), projected=True)


def test_extract_alpha():
    adot = np.array([[0, -3, 2], [3, 0, -1], [-2, 1, 0]], dtype=float)
    assert np.allclose(extract_alpha(adot), [1, 2, 3])
    with pytest.raises(SymmetryError):
        extract_alpha(np.eye(3))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_gram_from_closed_form(n):
    rng = np.random.default_rng(n)
    for _ in range(10):
        p = HamiltonianParams.random(n, rng)
        g = extract_gamma_gram(addot_closed_form(p), p.alpha, n)
        assert np.abs(g - gamma_gram(p)).max() < 1e-9


def test_gram_rejects_indefinite_data():
    addot = np.diag([5.0, -1.0, -1.0])
    with pytest.raises(NonPhysicalDerivativesError):
        extract_gamma_gram(addot, np.zeros(3), 3)


def test_gram_clips_tiny_negative_eigenvalues():
    p = HamiltonianParams(3, np.zeros(3), np.zeros(8), np.zeros((3, 8)))
    addot = addot_closed_form(p) + 1e-9 * np.diag([1.0, 0, 0])
    g = extract_gamma_gram(addot, p.alpha, 3)
    assert np.linalg.eigvalsh(g).min() >= 0


def test_pivoted_cholesky_pivot_order():
    gram = np.diag([1.0, 4.0, 2.0])
    L, piv = pivoted_cholesky(gram)
    assert piv == [1, 2, 0]
    assert np.allclose(L @ L.T, gram)


def test_pivot_ties_go_to_lowest_index():
    _, piv = pivoted_cholesky(np.eye(3) + 1e-12 * np.diag([0.0, 1.0, 2.0]))
    assert piv == [0, 1, 2]


def test_pivoted_cholesky_rank_deficient():
    v = np.array([[1.0], [2.0], [0.5]])
    L, piv = pivoted_cholesky(v @ v.T)
    assert len(piv) == 1
    assert np.allclose(L @ L.T, v @ v.T)


def test_canonical_gamma_pattern():
    rng = np.random.default_rng(0)
    p = HamiltonianParams.random(3, rng)
    g = canonicalize_gamma(gamma_gram(p), 3)
    assert not g[:, 3:].any()
    assert np.allclose(g @ g.T, gamma_gram(p))
    _, piv = pivoted_cholesky(gamma_gram(p))
    for col, row in enumerate(piv):
        assert g[row, col] > 0
        assert all(g[r, col] == 0 for r in piv[:col])


def test_gauge_soundness():
    # any gamma with the same Gram gives the same canonical gamma
    basis = su_algebra(3)[0]
    rng = np.random.default_rng(4)
    p = HamiltonianParams.random(3, rng)
    q, _ = np.linalg.qr(rng.normal(size=(8, 8)))
    p2, _ = apply_gauge(p, basis, q)
    r1, r2 = reconstruct(_exact_stack(p), 3), reconstruct(_exact_stack(p2), 3)
    assert np.abs(r1.gram_est - r2.gram_est).max() < 1e-9
    assert np.abs(r1.gamma_canonical - r2.gamma_canonical).max() < 1e-9
    pred = nested_derivative_stack(r1.params, basis, 3)
    assert np.abs(pred - nested_derivative_stack(p, basis, 3)).max() < 1e-8


def test_beta_zero_coupling():
    _, f, d = su_algebra(3)
    beta, rank, _ = extract_beta(np.zeros((3, 3)), np.zeros(3), np.zeros((3, 8)), f, d)
    assert rank == 0 and not beta.any()


def test_beta_worked_example():
    p = worked_example_params()
    _, f, d = su_algebra(3)
    beta, rank, _ = extract_beta(tridot_closed_form(p, f, d), p.alpha, p.gamma, f, d)
    assert rank == 3
    assert np.allclose(beta[:3], [1, 2, 1], atol=1e-6)
    assert not beta[3:].any()


def test_reconstruct_worked_example():
    rep = reconstruct(_exact_stack(worked_example_params()), 3)
    assert np.allclose(rep.alpha_est, [1, 2, 3])
    assert np.allclose(rep.gram_est, np.eye(3))
    assert np.allclose(rep.beta_est[:3], [1, 2, 1], atol=1e-6)
    assert rep.underdetermined and rep.beta_identifiable_rank == 3
    assert rep.residuals.max() < 1e-10


def test_reconstruct_zero_stack():
    rep = reconstruct(DerivativeStack(np.zeros((3, 3, 3)), projected=True), 3)
    assert rep.beta_identifiable_rank == 0
    assert not rep.alpha_est.any() and not rep.gamma_canonical.any() and not rep.beta_est.any()


def test_reconstruct_requires_projection():
    with pytest.raises(ValueError):
        reconstruct(DerivativeStack(np.zeros((3, 3, 3))), 3)
    with pytest.raises(ValueError):
        reconstruct(DerivativeStack(np.zeros((2, 3, 3)), projected=True), 3)


def test_report_round_trip(tmp_path):
    rep = reconstruct(_exact_stack(worked_example_params()), 3)
    path = tmp_path / "r.json"
    rep.save(path)
    back = ReconstructionReport.load(path)
    assert np.array_equal(back.beta_est, rep.beta_est)
    assert back.beta_identifiable_rank == 3 and back.underdetermined
    assert "identifiable beta rank = 3 of 8" in back.summary()


def test_rank_matches_coefficient_map():
    _, f, _ = su_algebra(3)
    rng = np.random.default_rng(1)
    gamma = np.zeros((3, 8))
    gamma[0, 0] = 1.0
    rep = reconstruct(_exact_stack(HamiltonianParams(3, rng.normal(size=3),
                                                     rng.normal(size=8), gamma)), 3)
    A = beta_coefficient_map(rep.gamma_canonical, f)
    assert rep.beta_identifiable_rank == np.linalg.matrix_rank(A) == 0


@pytest.mark.parametrize("n, expected", [(2, 4), (3, 8), (10, 89)])
def test_required_order(n, expected):
    assert required_order(n) == expected


def _proper_canonical_truth(p, basis):
    """The truth moved into the canonical gauge, or None if that needs a reflection."""
    gc = canonicalize_gamma(gamma_gram(p), p.n)
    r = np.linalg.solve(p.gamma, gc).T
    if np.linalg.det(r) < 0:
        return None
    return apply_gauge(p, basis, r)[0]


def test_fit_from_truth_is_stationary():
    basis = su_algebra(2)[0]
    rng = np.random.default_rng(2)
    truth = None
    while truth is None:
        truth = _proper_canonical_truth(HamiltonianParams.random(2, rng), basis)
    fit = fit_parameters(_exact_stack(truth, 4), 2, basis, truth, 4, jitter=0.0)
    assert fit.objective < 1e-16
    assert np.abs(fit.params.beta - truth.beta).max() < 1e-8


def test_fit_recovers_canonical_truth_su2():
    basis = su_algebra(2)[0]
    rng = np.random.default_rng(8)
    checked = 0
    while checked < 3:
        p = HamiltonianParams.random(2, rng)
        truth = _proper_canonical_truth(p, basis)
        if truth is None:
            continue
        stack = _exact_stack(p, 4)
        fit = fit_parameters(stack, 2, basis, reconstruct(stack, 2).params, 4)
        assert np.abs(fit.params.beta - truth.beta).max() < 1e-4
        assert np.abs(fit.params.gamma - truth.gamma).max() < 1e-4
        assert np.all(np.diff(fit.history) <= 0)
        checked += 1


def test_fit_with_reflected_gauge_is_observationally_equivalent():
    # for N = 2 a reflection of the generator frame also reproduces the data
    basis = su_algebra(2)[0]
    rng = np.random.default_rng(8)
    while True:
        p = HamiltonianParams.random(2, rng)
        if _proper_canonical_truth(p, basis) is None:
            break
    stack = _exact_stack(p, 4)
    fit = fit_parameters(stack, 2, basis, reconstruct(stack, 2).params, 4)
    a = simulate_trajectory(p, basis, 0.01, 200)
    b = simulate_trajectory(fit.params, basis, 0.01, 200)
    assert np.abs(a.values - b.values).max() < 1e-9


def test_fit_rejects_non_canonical_init():
    p = HamiltonianParams.random(3, np.random.default_rng(0))
    with pytest.raises(ValueError):
        fit_parameters(_exact_stack(p, 4), 3, su_algebra(3)[0], p, 4)


def test_fit_needs_enough_orders():
    p = worked_example_params()
    with pytest.raises(ValueError):
        fit_parameters(_exact_stack(p, 3), 3, su_algebra(3)[0], p, 4)


def test_pipeline_alpha_from_finite_differences():
    p = worked_example_params()
    tr = simulate_trajectory(p, su_algebra(3)[0], 1e-3, 5, 5)
    res = reconstruct_trajectory(tr)
    assert res.fit is None
    assert np.abs(res.report.alpha_est - p.alpha).max() < 1e-3
