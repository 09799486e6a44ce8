"""Exact joint evolution and the nine measured Bloch functions.

The qubit starts in one of the three test states ``(1 + S_k) / 2`` and the
environment in ``1 / N``.  Propagation uses the eigendecomposition of H, so
there is no integrator error and negative times cost nothing extra.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, NotHermitianError
from .model import HamiltonianParams, assemble_hamiltonian
from .sun_algebra import PAULI, SuNBasis

CSV_HEADER = ["t"] + [f"a{j}_k{k}" for k in (1, 2, 3) for j in (1, 2, 3)]


@dataclass(frozen=True)
class Preparation:
    """Test preparation ``k`` in {1, 2, 3}: qubit along +S_k, environment fully mixed."""

    k: int

    def __post_init__(self):
        if self.k not in (1, 2, 3):
            raise ValueError(f"preparation index must be 1, 2 or 3, got {self.k}")

    def system_state(self) -> np.ndarray:
        return 0.5 * (np.eye(2) + PAULI[self.k - 1])

    def joint_state(self, n: int) -> np.ndarray:
        return np.kron(self.system_state(), np.eye(n) / n)


PREPARATIONS = (Preparation(1), Preparation(2), Preparation(3))


@dataclass(frozen=True)
class Trajectory:
    """Sampled ``a_j^(k)(t)``; ``values[i, j, k]`` is ``a_{j+1}^{(k+1)}(times[i])``."""

    times: np.ndarray
    values: np.ndarray = field(repr=False)
    dt: float
    n: int

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (times.size, 3, 3):
            raise DimensionMismatchError(
                f"values must have shape ({times.size}, 3, 3), got {values.shape}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.times.size

    def bloch_norms(self) -> np.ndarray:
        """Bloch vector length per (time, preparation)."""
        return np.sqrt((self.values ** 2).sum(axis=1))

    def to_csv(self, path) -> None:
        rows = [",".join(CSV_HEADER)]
        flat = self.values.transpose(0, 2, 1).reshape(len(self), 9)
        for t, row in zip(self.times, flat):
            rows.append(",".join(f"{x:.17g}" for x in (t, *row)))
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(rows) + "\n")

    @classmethod
    def from_csv(cls, path, n: int, dt: float | None = None) -> "Trajectory":
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if header != CSV_HEADER:
                raise ValueError(f"{path}: unexpected header {header!r}")
            body = [line for line in fh.read().splitlines() if line.strip()]
        if not body:
            raise ValueError(f"{path}: no data rows")
        try:
            data = np.array([[float(x) for x in line.split(",")] for line in body])
        except ValueError as exc:
            raise ValueError(f"{path}: malformed row ({exc})") from None
        if data.shape[1] != 10:
            raise ValueError(f"{path}: expected 10 columns, got {data.shape[1]}")
        times = data[:, 0]
        if dt is None:
            if times.size < 2:
                raise ValueError(f"{path}: need two rows to infer the time step")
            dt = float(np.median(np.diff(times)))
        values = data[:, 1:].reshape(-1, 3, 3).transpose(0, 2, 1)
        return cls(times, values, dt, n)


def _check_hermitian(h, tol=1e-10):
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionMismatchError(f"Hamiltonian must be square, got shape {h.shape}")
    defect = np.abs(h - h.conj().T).max() if h.size else 0.0
    if defect > tol:
        raise NotHermitianError(f"Hamiltonian is not Hermitian (defect {defect:.2e})")


def propagators(h: np.ndarray, times) -> np.ndarray:
    """``exp(-i H t)`` for each t, from one eigendecomposition of H."""
    _check_hermitian(h)
    w, v = np.linalg.eigh(h)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    phases = np.exp(-1j * np.outer(times, w))
    return np.einsum("ia,ta,ja->tij", v, phases, v.conj())


def evolve_joint(h: np.ndarray, prep: Preparation, t: float) -> np.ndarray:
    """``rho(t) = e^{-iHt} rho_0 e^{iHt}`` for the joint qubit-environment state."""
    _check_hermitian(h)
    if h.shape[0] % 2:
        raise DimensionMismatchError(f"joint dimension must be 2N, got {h.shape[0]}")
    rho0 = prep.joint_state(h.shape[0] // 2)
    if t == 0:
        return rho0.astype(complex)
    u = propagators(h, [t])[0]
    return u @ rho0 @ u.conj().T


def partial_trace_env(rho: np.ndarray, n: int) -> np.ndarray:
    """Trace out the N-level environment from a 2N x 2N operator."""
    rho = np.asarray(rho)
    if rho.shape != (2 * n, 2 * n):
        raise DimensionMismatchError(f"expected a {2 * n} x {2 * n} matrix, got {rho.shape}")
    return np.einsum("iaja->ij", rho.reshape(2, n, 2, n))


def bloch_point(rho_sys: np.ndarray) -> np.ndarray:
    """``a_j = Tr(rho S_j)``."""
    return np.einsum("ab,jba->j", rho_sys, PAULI).real


def simulate_trajectory(params: HamiltonianParams, basis: SuNBasis, dt: float,
                        steps_forward: int, steps_backward: int = 0,
                        noise_sigma: float = 0.0, seed: int = 0) -> Trajectory:
    """Sample all nine functions on ``t = -steps_backward*dt ... steps_forward*dt``.

    With ``noise_sigma > 0`` independent Gaussian noise is added to every
    sample, drawn from ``np.random.default_rng(seed)``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if steps_forward < 0 or steps_backward < 0:
        raise ValueError("step counts must be non-negative")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
    n = params.n
    h = assemble_hamiltonian(params, basis)
    times = np.arange(-steps_backward, steps_forward + 1) * dt
    u = propagators(h, times)
    # a_j^(k)(t) = Tr[U rho_k U^dag (S_j x 1)]
    sigma = np.array([np.kron(p, np.eye(n)) for p in PAULI])
    rho0 = np.array([p.joint_state(n) for p in PREPARATIONS])
    evolved = np.einsum("tab,kbc,tdc->tkad", u, rho0, u.conj())
    values = np.einsum("tkad,jda->tjk", evolved, sigma).real
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        values = values + rng.normal(0.0, noise_sigma, size=values.shape)
    return Trajectory(times, values, float(dt), n)
