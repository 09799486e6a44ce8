"""Recover Hamiltonian parameters from derivative matrices at t = 0.

Orders one to three are inverted in closed form:

* the first-derivative matrix gives ``alpha`` exactly,
* the second gives the Gram matrix ``gamma gamma^T`` (only its gauge-invariant
  content), from which a canonical ``gamma`` is picked,
* the third is linear in ``beta`` given ``alpha`` and ``gamma``; it fixes at
  most three combinations of ``beta``, found by minimum-norm least squares.

:func:`fit_parameters` refines all parameters against higher orders with the
nested-commutator predictions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .commutators import (EPS, beta_coefficient_map, nested_derivative_stack,
                          tridot_alpha_gram_part)
from .derivatives import DerivativeStack, estimate_derivatives, symmetry_project
from .dynamics import Trajectory
from .errors import (DimensionMismatchError, InvalidDimensionError,
                     NonPhysicalDerivativesError, SymmetryError)
from .model import HamiltonianParams
from .sun_algebra import StructureConstants, SuNBasis, su_algebra

SYMMETRY_TOL = 1e-6
PSD_TOL = 1e-6
RANK_TOL = 1e-8
PIVOT_TOL = 1e-12
PIVOT_TIE_TOL = 1e-6
DAMP_FLOOR = 1e-6
_UPPER = ((0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class ReconstructionReport:
    n: int
    alpha_est: np.ndarray
    gram_est: np.ndarray
    gamma_canonical: np.ndarray
    beta_est: np.ndarray
    beta_identifiable_rank: int
    residuals: np.ndarray
    orders_used: int
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def underdetermined(self) -> bool:
        return self.beta_identifiable_rank < self.n * self.n - 1

    @property
    def params(self) -> HamiltonianParams:
        return HamiltonianParams(self.n, self.alpha_est, self.beta_est, self.gamma_canonical)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "alpha_est": self.alpha_est.tolist(),
            "gram_est": self.gram_est.tolist(),
            "gamma_canonical": self.gamma_canonical.tolist(),
            "beta_est": self.beta_est.tolist(),
            "beta_identifiable_rank": self.beta_identifiable_rank,
            "underdetermined": self.underdetermined,
            "residuals": self.residuals.tolist(),
            "orders_used": self.orders_used,
            "singular_values": self.singular_values.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReconstructionReport":
        return cls(
            n=int(data["n"]),
            alpha_est=np.array(data["alpha_est"], dtype=float),
            gram_est=np.array(data["gram_est"], dtype=float),
            gamma_canonical=np.array(data["gamma_canonical"], dtype=float),
            beta_est=np.array(data["beta_est"], dtype=float),
            beta_identifiable_rank=int(data["beta_identifiable_rank"]),
            residuals=np.array(data["residuals"], dtype=float),
            orders_used=int(data["orders_used"]),
            singular_values=np.array(data.get("singular_values", []), dtype=float),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "ReconstructionReport":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def summary(self) -> str:
        lines = [
            f"environment dimension N = {self.n}",
            "alpha = " + np.array2string(self.alpha_est, precision=8),
            "gram(gamma) =",
            np.array2string(self.gram_est, precision=8),
            "beta = " + np.array2string(self.beta_est, precision=8),
            f"identifiable beta rank = {self.beta_identifiable_rank} of {self.n ** 2 - 1}"
            + (" (under-determined)" if self.underdetermined else ""),
            f"orders used = {self.orders_used}",
            "per-order residuals = " + np.array2string(self.residuals, precision=3),
        ]
        return "\n".join(lines)


def _scale(a) -> float:
    return max(1.0, float(np.abs(a).max()))


def extract_alpha(adot) -> np.ndarray:
    """Invert ``a'_jk = -e_jkl alpha_l``."""
    adot = np.asarray(adot, dtype=float)
    defect = np.abs(adot + adot.T).max()
    if defect > SYMMETRY_TOL * _scale(adot):
        raise SymmetryError(f"first-derivative matrix is not antisymmetric (defect {defect:.2e})")
    return -0.5 * np.einsum("ljk,jk->l", EPS, adot)


def extract_gamma_gram(addot, alpha, n: int) -> np.ndarray:
    """Solve the second-derivative equations for ``g = gamma gamma^T``.

    Off-diagonal entries give ``g_jk`` directly.  The diagonal gives pairwise
    sums ``S_i = c (g_jj + g_kk)`` over the two other indices, which are
    inverted as ``c g_ii = (S_j + S_k - S_i) / 2``.  Eigenvalues down to
    ``-1e-6`` (relative) are clipped to zero; anything more negative means
    the data cannot come from this model.
    """
    addot = np.asarray(addot, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    scale = _scale(addot)
    defect = np.abs(addot - addot.T).max()
    if defect > SYMMETRY_TOL * scale:
        raise SymmetryError(f"second-derivative matrix is not symmetric (defect {defect:.2e})")
    c = 2.0 / n
    cg = addot - np.outer(alpha, alpha)
    a2 = alpha @ alpha
    s = -np.diag(addot) - (a2 - alpha ** 2)
    cg[np.diag_indices(3)] = 0.5 * (s.sum() - 2 * s)
    g = 0.5 * (cg + cg.T) / c
    w, v = np.linalg.eigh(g)
    if w.min() < -PSD_TOL * max(1.0, np.abs(w).max()):
        raise NonPhysicalDerivativesError(
            f"coupling Gram matrix is indefinite (smallest eigenvalue {w.min():.3e})")
    if w.min() < 0:
        g = (v * np.clip(w, 0, None)) @ v.T
    return g


def pivoted_cholesky(gram, tol: float = PIVOT_TOL):
    """Pivoted lower factor of a 3 x 3 PSD matrix.

    Returns ``(L, pivots)`` with ``L @ L.T ~ gram``; column i of L is zero
    above row ``pivots[i]`` in pivot order and ``L[pivots[i], i] > 0``.
    Pivots take the largest remaining diagonal, lowest index on ties;
    diagonals within ``PIVOT_TIE_TOL`` (relative) of the largest count as
    tied, so rounding noise in nearly degenerate data does not reorder them.
    """
    gram = np.asarray(gram, dtype=float)
    k = gram.shape[0]
    resid = gram.copy()
    L = np.zeros((k, k))
    pivots = []
    cutoff = tol * max(1.0, float(np.abs(np.diag(gram)).max()))
    for col in range(k):
        free = [i for i in range(k) if i not in pivots]
        diag = np.array([resid[i, i] for i in free])
        top = diag.max()
        best = next(i for i, v in zip(free, diag) if v >= top - PIVOT_TIE_TOL * abs(top))
        if resid[best, best] <= cutoff:
            break
        piv = np.sqrt(resid[best, best])
        L[best, col] = piv
        for i in free:
            if i != best:
                L[i, col] = resid[i, best] / piv
        resid = resid - np.outer(L[:, col], L[:, col])
        pivots.append(best)
    return L, pivots


def canonicalize_gamma(gram, n: int) -> np.ndarray:
    """Representative ``gamma`` with the given Gram, supported on generators 1..3."""
    m = n * n - 1
    if m < 3:
        raise InvalidDimensionError(f"need at least three generators, N={n}")
    L, _ = pivoted_cholesky(gram)
    gamma = np.zeros((3, m))
    gamma[:, :3] = L
    return gamma


def extract_beta(trdot, alpha, gamma, f: StructureConstants,
                 d: StructureConstants | None = None):
    """Minimum-norm ``beta`` from the third-derivative matrix.

    Returns ``(beta, rank, singular_values)``.  Components of ``beta`` outside
    the row space of the coefficient map are not determined at this order
    and come back as zero.
    """
    trdot = np.asarray(trdot, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    n = f.n
    if gamma.shape != (3, n * n - 1):
        raise DimensionMismatchError(f"gamma shape {gamma.shape} does not match SU({n})")
    defect = np.abs(trdot + trdot.T).max()
    if defect > SYMMETRY_TOL * _scale(trdot):
        raise SymmetryError(f"third-derivative matrix is not antisymmetric (defect {defect:.2e})")
    resid = trdot - tridot_alpha_gram_part(np.asarray(alpha, dtype=float), gamma, n, d)
    rhs = np.array([resid[j, k] for j, k in _UPPER])
    A = beta_coefficient_map(gamma, f)
    u, s, vt = np.linalg.svd(A, full_matrices=False)
    rank = int((s > RANK_TOL * max(1.0, s[0] if s.size else 0.0)).sum())
    beta = vt[:rank].T @ ((u[:, :rank].T @ rhs) / s[:rank])
    return beta, rank, s


def reconstruct(stack: DerivativeStack, n: int, f: StructureConstants | None = None,
                d: StructureConstants | None = None,
                basis: SuNBasis | None = None) -> ReconstructionReport:
    """Closed-form reconstruction from a projected stack of order >= 3."""
    if not stack.projected:
        raise ValueError("reconstruct needs a symmetry-projected derivative stack")
    if stack.order < 3:
        raise ValueError(f"need derivative orders 1..3, stack has {stack.order}")
    sb, sf, sd = su_algebra(n)
    f = sf if f is None else f
    d = sd if d is None else d
    basis = sb if basis is None else basis
    alpha = extract_alpha(stack[1])
    gram = extract_gamma_gram(stack[2], alpha, n)
    gamma = canonicalize_gamma(gram, n)
    beta, rank, sv = extract_beta(stack[3], alpha, gamma, f, d)
    est = HamiltonianParams(n, alpha, beta, gamma)
    predicted = nested_derivative_stack(est, basis, stack.order)
    residuals = np.sqrt(((predicted - stack.mats) ** 2).sum(axis=(1, 2)))
    return ReconstructionReport(n, alpha, gram, gamma, beta, rank, residuals, stack.order, sv)


def required_order(n: int) -> int:
    """Smallest derivative order giving ~4.5 equations per order for 4N^2 - 1 unknowns."""
    if n < 2:
        raise InvalidDimensionError(f"N must be >= 2, got {n}")
    unknowns = 4 * n * n - 1
    return -(-2 * unknowns // 9)


# -- multi-order fit -----------------------------------------------------------

@dataclass
class FitResult:
    params: HamiltonianParams
    objective: float
    history: list
    converged: bool
    iterations: int
    message: str


class _GaugeParametrization:
    """Free coordinates for (alpha, beta, gamma) with gamma in canonical pattern.

    gamma lives in the first three generator columns, lower triangular in
    pivot order; pivot entries are stored as logarithms to keep them positive.
    """

    def __init__(self, init: HamiltonianParams):
        self.n = init.n
        self.m = init.size
        g3 = init.gamma[:, :3]
        _, pivots = pivoted_cholesky(g3 @ g3.T)
        self.slots = []
        placed = []
        for col, piv in enumerate(pivots):
            self.slots.append((piv, col, True))
            for row in range(3):
                if row != piv and row not in placed:
                    self.slots.append((row, col, False))
            placed.append(piv)

    def pack(self, p: HamiltonianParams) -> np.ndarray:
        gam = [np.log(max(p.gamma[r, c], 1e-300)) if is_piv else p.gamma[r, c]
               for r, c, is_piv in self.slots]
        return np.concatenate([p.alpha, p.beta, np.array(gam, dtype=float)])

    def unpack(self, x) -> HamiltonianParams:
        gamma = np.zeros((3, self.m))
        for (r, c, is_piv), v in zip(self.slots, x[3 + self.m:]):
            gamma[r, c] = np.exp(v) if is_piv else v
        return HamiltonianParams(self.n, x[:3], x[3:3 + self.m], gamma)


def fit_objective(params: HamiltonianParams, stack: DerivativeStack, basis: SuNBasis,
                  max_order: int) -> float:
    pred = nested_derivative_stack(params, basis, max_order)
    return float(((pred - stack.mats[:max_order]) ** 2).sum())


def fit_parameters(stack: DerivativeStack, n: int, basis: SuNBasis, init: HamiltonianParams,
                   max_order: int, max_iter: int = 500, rtol: float = 1e-10,
                   jitter: float = 1e-2, seed: int = 0) -> FitResult:
    """Levenberg-Marquardt fit of all parameters to orders 1..max_order.

    The objective is the sum of squared entry differences between ``stack``
    and the nested-commutator predictions.  Only decreasing steps are
    accepted, so ``history`` (objective after each accepted step, starting
    with the initial value) is non-increasing.  Stops when an accepted step
    lowers the objective by less than ``rtol`` relative, when no step can
    lower it any more, or after ``max_iter`` iterations.
    """
    if stack.order < max_order:
        raise ValueError(f"stack has order {stack.order}, fit asks for {max_order}")
    if init.n != n or basis.n != n:
        raise DimensionMismatchError("init, basis and n disagree on N")
    if np.any(init.gamma[:, 3:]):
        raise ValueError("init.gamma must be in canonical gauge (columns beyond 3 zero)")
    par = _GaugeParametrization(init)
    if any(init.gamma[r, c] <= 0 for r, c, is_piv in par.slots if is_piv):
        raise ValueError("init.gamma pivot entries must be positive (canonical gauge)")
    target = stack.mats[:max_order].reshape(-1)

    def residual(x):
        return nested_derivative_stack(par.unpack(x), basis, max_order).reshape(-1) - target

    def jacobian(x, r0):
        J = np.empty((r0.size, x.size))
        for i in range(x.size):
            step = 1e-6 * max(1.0, abs(x[i]))
            xp, xm = x.copy(), x.copy()
            xp[i] += step
            xm[i] -= step
            J[:, i] = (residual(xp) - residual(xm)) / (2 * step)
        return J

    x = par.pack(init)
    if jitter > 0:
        rng = np.random.default_rng(seed)
        size = jitter * max(1.0, np.abs(init.beta).max())
        x[3:3 + par.m] += rng.normal(0.0, size, par.m)
    r = residual(x)
    obj = float(r @ r)
    history = [obj]
    lam = 1e-3
    converged = False
    message = "iteration limit reached"
    it = 0
    while it < max_iter:
        it += 1
        if obj == 0.0:
            converged, message = True, "objective is zero"
            break
        J = jacobian(x, r)
        JtJ = J.T @ J
        grad = J.T @ r
        # floor keeps directions the data do not see from taking huge steps
        damp = np.maximum(np.diag(JtJ), DAMP_FLOOR * max(np.diag(JtJ).max(), 1.0))
        accepted = False
        while lam < 1e16:
            try:
                delta = np.linalg.solve(JtJ + lam * np.diag(damp), -grad)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            x_new = x + delta
            r_new = residual(x_new)
            obj_new = float(r_new @ r_new)
            if np.isfinite(obj_new) and obj_new < obj:
                accepted = True
                break
            lam *= 10
        if not accepted:
            converged, message = True, "no further decrease possible"
            break
        rel = (obj - obj_new) / obj
        x, r, obj = x_new, r_new, obj_new
        history.append(obj)
        lam = max(lam / 3, 1e-12)
        if rel < rtol:
            converged, message = True, "relative decrease below tolerance"
            break
    return FitResult(par.unpack(x), obj, history, converged, it, message)


@dataclass
class PipelineResult:
    stack: DerivativeStack
    report: ReconstructionReport
    fit: FitResult | None

    @property
    def params(self) -> HamiltonianParams:
        """Fitted parameters when a fit ran, otherwise the closed-form estimate."""
        return self.fit.params if self.fit is not None else self.report.params


def reconstruct_trajectory(traj: Trajectory, max_order: int = 3,
                           stencil_halfwidth: int | None = None, stride: int = 1,
                           seed: int = 0) -> PipelineResult:
    """Differentiate, project, reconstruct, and fit when ``max_order > 3``."""
    n = traj.n
    basis, f, d = su_algebra(n)
    order = max(3, max_order)
    raw = estimate_derivatives(traj, order, stencil_halfwidth, stride)
    stack = symmetry_project(raw)
    report = reconstruct(stack, n, f, d, basis)
    fit = None
    if max_order > 3:
        fit = fit_parameters(stack, n, basis, report.params, max_order, seed=seed)
    return PipelineResult(stack, report, fit)
