"""Derivative matrices from nested commutators, their closed forms, and
matrix-level checks of the cross-product commutator identities.

The n-th derivative of ``a_j^(k)`` at t = 0 is
``Tr[(rho_k (x) 1/N) (i ad_H)^n (S_j (x) 1)]`` with ``ad_H X = [H, X]``.
:func:`nested_derivative_matrix` evaluates this directly and is the ground
truth every closed form and finite-difference estimate is checked against.

Closed forms, with ``c = 2/N``, ``g = gamma gamma^T`` and ``e`` the
Levi-Civita symbol::

    a'_jk   = -e_jkl alpha_l
    a''_jk  = alpha_j alpha_k + c g_jk - delta_jk (|alpha|^2 + c tr g)
    a'''_jk = e_jkl [alpha_l (|alpha|^2 + c tr g) + 2c (g alpha)_l + c D_l]
              + c f_plm beta_p gamma_jl gamma_km

where ``D_l = d_pqr gamma_lp sum_i gamma_iq gamma_ir`` uses the symmetric
SU(N) constants and vanishes for N = 2.  The factor c is
``Tr(L_a L_b) / N`` for the maximally mixed environment; with N = 2 it is one.

Operator-valued vectors
-----------------------
The identity checks work on stacks of joint-space matrices, shape
``(K, 2N, 2N)``: ``K = 3`` for vectors indexed like the Pauli matrices and
``K = N^2 - 1`` for vectors indexed like the generators.  Products inside
cross and dot contractions keep the written left-to-right order.
"""

from __future__ import annotations

import numpy as np

from .model import HamiltonianParams, assemble_hamiltonian
from .sun_algebra import (PAULI, StructureConstants, SuNBasis, build_generators,
                          levi_civita, su_algebra)

EPS = levi_civita()
_UPPER = ((0, 1), (0, 2), (1, 2))


# -- oracle ------------------------------------------------------------------

def nested_derivative_stack(params: HamiltonianParams, basis: SuNBasis,
                            max_order: int) -> np.ndarray:
    """Exact derivative matrices for orders 1..max_order, shape (max_order, 3, 3)."""
    n = params.n
    h = assemble_hamiltonian(params, basis)
    # Tr[(rho_k x 1/N) X] = Tr[(S_k x 1) X] / 2N for traceless X
    probes = np.array([np.kron(p, np.eye(n)) for p in PAULI]) / (2 * n)
    out = np.empty((max_order, 3, 3))
    imag = 0.0
    scale = 0.0
    for j in range(3):
        x = np.kron(PAULI[j], np.eye(n))
        for order in range(max_order):
            x = 1j * (h @ x - x @ h)
            vals = np.einsum("kab,ba->k", probes, x)
            out[order, j] = vals.real
            imag = max(imag, np.abs(vals.imag).max())
            scale = max(scale, np.abs(vals.real).max())
    if imag > 1e-9 * max(1.0, scale):
        raise ArithmeticError(f"derivative matrix has imaginary residue {imag:.2e}")
    return out


def nested_derivative_matrix(params: HamiltonianParams, basis: SuNBasis, order: int) -> np.ndarray:
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    return nested_derivative_stack(params, basis, order)[order - 1]


# -- closed forms --------------------------------------------------------------

def _coupling_scale(params: HamiltonianParams) -> float:
    return 2.0 / params.n


def adot_closed_form(params: HamiltonianParams) -> np.ndarray:
    return -np.einsum("jkl,l->jk", EPS, params.alpha)


def addot_closed_form(params: HamiltonianParams) -> np.ndarray:
    a = params.alpha
    g = _coupling_scale(params) * params.gamma @ params.gamma.T
    return np.outer(a, a) + g - np.eye(3) * (a @ a + np.trace(g))


def d_term(gamma: np.ndarray, d: StructureConstants) -> np.ndarray:
    """``D_l = d_pqr gamma_lp sum_i gamma_iq gamma_ir``."""
    return np.einsum("pqr,lp,iq,ir->l", d.dense(), gamma, gamma, gamma)


def tridot_alpha_gram_part(alpha, gamma, n: int, d: StructureConstants | None = None) -> np.ndarray:
    """Third-derivative matrix without the beta contribution."""
    if d is None:
        d = su_algebra(n)[2]
    c = 2.0 / n
    g = gamma @ gamma.T
    vec = alpha * (alpha @ alpha + c * np.trace(g)) + 2 * c * g @ alpha + c * d_term(gamma, d)
    return np.einsum("jkl,l->jk", EPS, vec)


def beta_coefficient_map(gamma: np.ndarray, f: StructureConstants) -> np.ndarray:
    """Linear map beta -> upper triangle (12, 13, 23) of the third-derivative matrix."""
    n = f.n
    full = (2.0 / n) * np.einsum("plm,jl,km->jkp", f.dense(), gamma, gamma)
    return np.array([full[j, k] for j, k in _UPPER])


def tridot_closed_form(params: HamiltonianParams, f: StructureConstants,
                       d: StructureConstants | None = None) -> np.ndarray:
    out = tridot_alpha_gram_part(params.alpha, params.gamma, params.n, d)
    upper = beta_coefficient_map(params.gamma, f) @ params.beta
    for (j, k), v in zip(_UPPER, upper):
        out[j, k] += v
        out[k, j] -= v
    return out


# -- operator-valued vector algebra ------------------------------------------

def lift(vec, dim: int) -> np.ndarray:
    """Numeric vector -> stack of scalar multiples of the identity."""
    vec = np.asarray(vec)
    return vec[:, None, None] * np.eye(dim)


def cross(x: np.ndarray, y: np.ndarray, tensor: np.ndarray) -> np.ndarray:
    """``[x cross y]_i = t_ijk x_j y_k`` for operator stacks, product order x then y.

    ``tensor`` is the Levi-Civita symbol for Pauli-indexed vectors or the
    dense ``f`` tensor for generator-indexed ones.
    """
    prod = np.einsum("jab,kbc->jkac", x, y, optimize=True)
    return np.tensordot(tensor, prod, axes=([1, 2], [0, 1]))


def contract(coeffs: np.ndarray, ops: np.ndarray) -> np.ndarray:
    """``[coeffs . ops]_i = coeffs_ik ops_k`` (operators carry the last index)."""
    return np.einsum("ik,kab->iab", coeffs, ops)


def commutator(a, b):
    return a @ b - b @ a


class JointOperators:
    """Joint-space Pauli and generator stacks plus the parameter contractions.

    Naming follows the vector notation: ``sigma`` (S), ``lam`` (L),
    ``g_lam`` (gamma . L, Pauli-indexed) and ``sigma_g`` (S . gamma,
    generator-indexed).
    """

    def __init__(self, params: HamiltonianParams, basis: SuNBasis, f: StructureConstants):
        n = params.n
        self.params = params
        self.dim = 2 * n
        self.eps = EPS
        self.f = f.dense()
        self.sigma = np.array([np.kron(p, np.eye(n)) for p in PAULI])
        self.lam = np.array([np.kron(np.eye(2), g) for g in basis.generators])
        self.alpha = lift(params.alpha, self.dim)
        self.beta = lift(params.beta, self.dim)
        self.h = assemble_hamiltonian(params, basis)

    def scross(self, x, y):
        return cross(x, y, self.eps)

    def fcross(self, x, y):
        return cross(x, y, self.f)

    def g_dot(self, lam_vec):
        """gamma . (generator-indexed vector) -> Pauli-indexed."""
        return contract(self.params.gamma, lam_vec)

    def dot_g(self, sig_vec):
        """(Pauli-indexed vector) . gamma -> generator-indexed."""
        return contract(self.params.gamma.T, sig_vec)

    @property
    def g_lam(self):
        return self.g_dot(self.lam)

    @property
    def sigma_g(self):
        return self.dot_g(self.sigma)

    def l_dot(self, x):
        """i [H, x] on each component."""
        return 1j * (np.einsum("ab,kbc->kac", self.h, x) - np.einsum("kab,bc->kac", x, self.h))

    def nested(self, order: int):
        x = self.sigma
        for _ in range(order):
            x = self.l_dot(x)
        return x


def _frobenius(stack):
    return float(np.sqrt((np.abs(stack) ** 2).sum()))


def double_commutator_terms(ops: JointOperators) -> list:
    """The six cross-product pieces of ``i[H, i[H, S]]``."""
    S, A, B, G = ops.sigma, ops.alpha, ops.beta, ops.g_lam
    sx, fx = ops.scross, ops.fcross
    return [
        sx(A, sx(A, S)),
        sx(A, sx(G, S)),
        sx(G, sx(A, S)),
        sx(G, sx(G, S)),
        sx(ops.g_dot(fx(B, ops.lam)), S),
        sx(ops.g_dot(fx(ops.sigma_g, ops.lam)), S),
    ]


def triple_commutator_pieces(ops: JointOperators) -> list:
    """``i[H, T]`` for each double-commutator term T, as sums of cross products.

    Each piece substitutes, one factor at a time, S -> alpha x S,
    L -> beta x L, S -> (gamma.L) x S and L -> (S.gamma) x L.  For the
    ``gamma.(beta x L) x S`` term the S substitution is written
    ``gamma.(beta x L) x alpha x S``.
    """
    S, L, A, B = ops.sigma, ops.lam, ops.alpha, ops.beta
    G, SG = ops.g_lam, ops.sigma_g
    sx, fx, gd, dg = ops.scross, ops.fcross, ops.g_dot, ops.dot_g
    aS = sx(A, S)
    gS = sx(G, S)
    bL = fx(B, L)
    sgL = fx(SG, L)
    p1 = [sx(A, sx(A, aS)), sx(A, sx(A, gS))]
    p2 = [sx(A, sx(G, aS)), sx(A, sx(gd(bL), S)), sx(A, sx(gd(sgL), S)), sx(A, sx(G, gS))]
    p3 = [sx(G, sx(A, aS)), sx(gd(bL), sx(A, S)), sx(gd(sgL), sx(A, S)), sx(G, sx(A, gS))]
    p4 = [
        sx(G, sx(G, aS)),
        sx(gd(bL), sx(G, S)),
        sx(G, sx(gd(bL), S)),
        sx(gd(sgL), sx(G, S)),
        sx(G, sx(gd(sgL), S)),
        sx(G, sx(G, gS)),
    ]
    p5 = [
        sx(gd(bL), aS),
        sx(gd(fx(B, bL)), S),
        sx(gd(fx(B, sgL)), S),
        sx(gd(bL), gS),
    ]
    p6 = [
        sx(gd(fx(dg(aS), L)), S),
        sx(gd(fx(SG, bL)), S),
        sx(gd(sgL), aS),
        sx(gd(fx(SG, sgL)), S),
        sx(gd(fx(dg(gS), L)), S),
        sx(gd(sgL), gS),
    ]
    return [sum(p) for p in (p1, p2, p3, p4, p5, p6)]


def verify_double_commutator(params: HamiltonianParams, basis: SuNBasis,
                             f: StructureConstants | None = None) -> float:
    """Frobenius residual of the six-term assembly against ``i[H, i[H, S_j]]``."""
    if f is None:
        f = su_algebra(params.n)[1]
    ops = JointOperators(params, basis, f)
    return _frobenius(sum(double_commutator_terms(ops)) - ops.nested(2))


def verify_triple_commutator(params: HamiltonianParams, basis: SuNBasis,
                             f: StructureConstants | None = None) -> float:
    """Frobenius residual of the summed triple-commutator pieces against ``(i ad_H)^3 S_j``."""
    if f is None:
        f = su_algebra(params.n)[1]
    ops = JointOperators(params, basis, f)
    return _frobenius(sum(triple_commutator_pieces(ops)) - ops.nested(3))


def verify_piecewise(params: HamiltonianParams, basis: SuNBasis,
                     f: StructureConstants | None = None) -> list:
    """Residual of each triple-commutator piece against ``i[H, T]`` for its own T."""
    if f is None:
        f = su_algebra(params.n)[1]
    ops = JointOperators(params, basis, f)
    terms = double_commutator_terms(ops)
    pieces = triple_commutator_pieces(ops)
    return [_frobenius(p - ops.l_dot(t)) for p, t in zip(pieces, terms)]


def verify_replacement_rules(basis: SuNBasis, trials: int, seed: int,
                             f: StructureConstants | None = None) -> float:
    """Max Frobenius residual of the substitution rules over random draws.

    Checks, for random real X, Y:

    * ``[X.S, Y x S] = -2i Y x X x S`` with 2 x 2 Pauli matrices,
    * the same with generators and the ``f`` cross product on N x N matrices,
    * ``[S.gamma.L, h(S, L)] = -2i h((gamma.L) x S, L) - 2i h(S, (S.gamma) x L)``
      for random gamma and bilinear ``h(u, v) = c_ij u_i v_j``.
    """
    if f is None:
        f = su_algebra(basis.n)[1]
    rng = np.random.default_rng(seed)
    n, m = basis.n, basis.size
    F = f.dense()
    worst = 0.0
    for _ in range(trials):
        x, y = rng.normal(size=3), rng.normal(size=3)
        lhs = np.array([commutator(np.einsum("k,kab->ab", x, PAULI), yk)
                        for yk in cross(lift(y, 2), PAULI, EPS)])
        rhs = -2j * cross(lift(y, 2), cross(lift(x, 2), PAULI, EPS), EPS)
        worst = max(worst, _frobenius(lhs - rhs))

        x, y = rng.normal(size=m), rng.normal(size=m)
        gens = basis.generators
        lhs = np.array([commutator(np.einsum("k,kab->ab", x, gens), yk)
                        for yk in cross(lift(y, n), gens, F)])
        rhs = -2j * cross(lift(y, n), cross(lift(x, n), gens, F), F)
        worst = max(worst, _frobenius(lhs - rhs))

        params = HamiltonianParams(n, np.zeros(3), np.zeros(m), rng.normal(size=(3, m)))
        ops = JointOperators(params, basis, f)
        c = rng.normal(size=(3, m))

        def bilinear(u, v):
            return np.einsum("ij,iab,jbc->ac", c, u, v)

        coupling = np.einsum("jab->ab", ops.sigma @ ops.g_lam)
        lhs = commutator(coupling, bilinear(ops.sigma, ops.lam))
        rhs = -2j * bilinear(ops.scross(ops.g_lam, ops.sigma), ops.lam) \
            - 2j * bilinear(ops.sigma, ops.fcross(ops.sigma_g, ops.lam))
        worst = max(worst, _frobenius(lhs - rhs))
    return worst


def replacement_pattern_residual(x, y) -> float:
    """``[X.S, Y x S] + 2i Y x X x S`` for one numeric pair (Pauli case)."""
    lhs = np.array([commutator(np.einsum("k,kab->ab", x, PAULI), yk)
                    for yk in cross(lift(y, 2), PAULI, EPS)])
    rhs = -2j * cross(lift(y, 2), cross(lift(x, 2), PAULI, EPS), EPS)
    return _frobenius(lhs - rhs)


__all__ = [
    "nested_derivative_matrix", "nested_derivative_stack", "adot_closed_form",
    "addot_closed_form", "tridot_closed_form", "tridot_alpha_gram_part",
    "beta_coefficient_map", "d_term", "cross", "contract", "lift", "JointOperators",
    "double_commutator_terms", "triple_commutator_pieces", "verify_double_commutator",
    "verify_triple_commutator", "verify_piecewise", "verify_replacement_rules",
    "replacement_pattern_residual", "build_generators",
]
