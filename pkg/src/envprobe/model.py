"""Qubit-environment Hamiltonian parameters and the explicit 2N x 2N matrix.

Tensor ordering is system (qubit) first, environment second, so the joint
operator ``S_j (x) L_k`` is ``np.kron(S_j, L_k)``.  Frequencies are angular,
in units with hbar = 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, InvalidDimensionError, NotOrthogonalError
from .sun_algebra import PAULI, SuNBasis


@dataclass(frozen=True)
class HamiltonianParams:
    """Real parameters ``alpha`` (3,), ``beta`` (N^2-1,), ``gamma`` (3, N^2-1)."""

    n: int
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        if self.n < 2:
            raise InvalidDimensionError(f"environment dimension must be >= 2, got {self.n}")
        m = self.n * self.n - 1
        alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        beta = np.asarray(self.beta, dtype=float).reshape(-1)
        gamma = np.asarray(self.gamma, dtype=float)
        if alpha.shape != (3,):
            raise DimensionMismatchError(f"alpha needs 3 entries, got {alpha.shape}")
        if beta.shape != (m,):
            raise DimensionMismatchError(f"beta needs {m} entries for N={self.n}, got {beta.shape}")
        if gamma.shape != (3, m):
            raise DimensionMismatchError(f"gamma must be 3 x {m} for N={self.n}, got {gamma.shape}")
        for name, arr in (("alpha", alpha), ("beta", beta), ("gamma", gamma)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def zeros(cls, n: int) -> "HamiltonianParams":
        m = n * n - 1
        return cls(n, np.zeros(3), np.zeros(m), np.zeros((3, m)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, scale: float = 1.0) -> "HamiltonianParams":
        m = n * n - 1
        return cls(n, scale * rng.normal(size=3), scale * rng.normal(size=m),
                   scale * rng.normal(size=(3, m)))

    @property
    def size(self) -> int:
        return self.n * self.n - 1

    def replace(self, **changes) -> "HamiltonianParams":
        fields = {"n": self.n, "alpha": self.alpha, "beta": self.beta, "gamma": self.gamma}
        fields.update(changes)
        return HamiltonianParams(**fields)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "gamma": self.gamma.tolist(),
        }


PARAM_FIELDS = ("n", "alpha", "beta", "gamma")


def params_from_dict(data: dict) -> HamiltonianParams:
    unknown = set(data) - set(PARAM_FIELDS)
    if unknown:
        raise ValueError(f"unknown parameter fields: {sorted(unknown)}")
    missing = [k for k in PARAM_FIELDS if k not in data]
    if missing:
        raise ValueError(f"missing parameter fields: {missing}")
    n = data["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise ValueError(f"n must be an integer, got {n!r}")
    return HamiltonianParams(n, data["alpha"], data["beta"], data["gamma"])


def load_params(path) -> HamiltonianParams:
    """Read a JSON parameter file with exactly the fields n, alpha, beta, gamma."""
    with open(path) as fh:
        return params_from_dict(json.load(fh))


def save_params(params: HamiltonianParams, path) -> None:
    Path(path).write_text(json.dumps(params.to_dict(), indent=2) + "\n")


def worked_example_params() -> HamiltonianParams:
    """The N = 3 worked example: alpha = (1, 2, 3), unit diagonal coupling."""
    gamma = np.zeros((3, 8))
    gamma[0, 0] = gamma[1, 1] = gamma[2, 2] = 1.0
    return HamiltonianParams(3, [1.0, 2.0, 3.0], [1, 2, 1, 1, 1, 1, 1, 0.1], gamma)


def _check_basis(params: HamiltonianParams, basis: SuNBasis):
    if params.n != basis.n:
        raise DimensionMismatchError(f"params are for N={params.n} but basis is SU({basis.n})")


def coupling_operators(params: HamiltonianParams, basis: SuNBasis) -> np.ndarray:
    """Environment operators ``G_j = sum_k gamma_jk L_k``, shape (3, N, N)."""
    _check_basis(params, basis)
    return np.einsum("jk,kab->jab", params.gamma, basis.generators)


def assemble_hamiltonian(params: HamiltonianParams, basis: SuNBasis) -> np.ndarray:
    """``H = (alpha.S (x) 1 + 1 (x) beta.L + gamma_jk S_j (x) L_k) / 2``."""
    _check_basis(params, basis)
    n = params.n
    sys_part = np.einsum("j,jab->ab", params.alpha, PAULI)
    env_part = np.einsum("k,kab->ab", params.beta, basis.generators)
    h = np.kron(sys_part, np.eye(n)) + np.kron(np.eye(2), env_part)
    for j, g in enumerate(coupling_operators(params, basis)):
        h = h + np.kron(PAULI[j], g)
    return 0.5 * h


def gamma_gram(params: HamiltonianParams) -> np.ndarray:
    """Gram matrix of the coupling rows, ``g_ij = gamma_i . gamma_j``."""
    return params.gamma @ params.gamma.T


def apply_gauge(params: HamiltonianParams, basis: SuNBasis, r, tol: float = 1e-10):
    """Rotate the environment basis by an orthogonal ``r``.

    ``L'_k = r_kl L_l``, ``beta' = r beta`` and ``gamma' = gamma r^T`` so
    the assembled Hamiltonian is unchanged.  The rotated matrices are in
    general no longer a Gell-Mann basis, and their structure constants differ.
    """
    _check_basis(params, basis)
    r = np.asarray(r, dtype=float)
    m = params.size
    if r.shape != (m, m):
        raise DimensionMismatchError(f"gauge matrix must be {m} x {m}, got {r.shape}")
    defect = np.abs(r @ r.T - np.eye(m)).max()
    if defect > tol:
        raise NotOrthogonalError(f"gauge matrix is not orthogonal (|r r^T - 1| = {defect:.2e})")
    new_basis = SuNBasis(basis.n, np.einsum("kl,lab->kab", r, basis.generators))
    new_params = params.replace(beta=r @ params.beta, gamma=params.gamma @ r.T)
    return new_params, new_basis
