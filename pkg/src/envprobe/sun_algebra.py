"""SU(N) generator bases and their structure constants.

Generators are normalised so that ``Tr(L_i L_j) = 2 delta_ij`` and obey
``[L_i, L_j] = 2i f_ijk L_k``.  Index triples in :class:`StructureConstants`
are 1-based to match the usual physics labelling (``f_123 = 1`` for SU(2)
and SU(3)); dense arrays returned by :meth:`StructureConstants.dense` are
0-based.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .errors import DimensionMismatchError, InvalidDimensionError

ZERO_TOL = 1e-12


@dataclass(frozen=True)
class SuNBasis:
    """Ordered Hermitian traceless generators of SU(N).

    ``generators`` has shape ``(N**2 - 1, N, N)``.
    """

    n: int
    generators: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.generators.setflags(write=False)

    @property
    def size(self) -> int:
        return self.generators.shape[0]

    def __len__(self):
        return self.size

    def __getitem__(self, i):
        return self.generators[i]

    def invariant_residuals(self) -> dict:
        """Worst-case deviations from Hermiticity, tracelessness and orthonormality."""
        g = self.generators
        herm = np.abs(g - np.conj(np.transpose(g, (0, 2, 1)))).max()
        trace = np.abs(np.einsum("kii->k", g)).max()
        gram = np.einsum("aij,bji->ab", g, g)
        ortho = np.abs(gram - 2 * np.eye(self.size)).max()
        return {"hermitian": float(herm), "traceless": float(trace), "orthonormal": float(ortho)}


@dataclass(frozen=True)
class StructureConstants:
    """Sparse real 3-index tensor stored on canonical triples.

    For the antisymmetric ``f`` tensor the keys satisfy ``i < j < k`` and
    lookups of permuted triples pick up the permutation sign.  With
    ``symmetric=True`` the same container holds the totally symmetric
    ``d`` tensor (keys ``i <= j <= k``, no sign).
    """

    n: int
    entries: dict = field(repr=False)
    symmetric: bool = False

    @property
    def size(self) -> int:
        return self.n * self.n - 1

    def __getitem__(self, triple) -> float:
        order = sorted(range(3), key=lambda a: triple[a])
        key = tuple(triple[a] for a in order)
        if self.symmetric:
            return self.entries.get(key, 0.0)
        if len(set(key)) < 3:
            return 0.0
        sign = _permutation_sign(order)
        return sign * self.entries.get(key, 0.0)

    def items(self):
        return self.entries.items()

    @cached_property
    def _dense(self) -> np.ndarray:
        arr = _dense_array(self)
        arr.setflags(write=False)
        return arr

    def dense(self) -> np.ndarray:
        return self._dense


def _permutation_sign(order) -> int:
    inversions = sum(1 for a, b in itertools.combinations(order, 2) if a > b)
    return -1 if inversions % 2 else 1


def _dense_array(sc: StructureConstants) -> np.ndarray:
    m = sc.size
    out = np.zeros((m, m, m))
    for (i, j, k), v in sc.entries.items():
        for perm in set(itertools.permutations(range(3))):
            idx = tuple((i, j, k)[p] - 1 for p in perm)
            out[idx] = v if sc.symmetric else _permutation_sign(perm) * v
    return out


def build_generators(n: int) -> SuNBasis:
    """Generalised Gell-Mann matrices for SU(n).

    The ordering groups everything that lives in the leading ``m x m`` block
    before moving on to ``m + 1``: for each ``m = 2..n`` the symmetric and
    antisymmetric off-diagonal pair for ``(i, m)``, ``i = 1..m-1``, followed
    by the diagonal generator ``L_{m^2-1}``.  For ``n = 2`` these are the Pauli
    matrices and for ``n = 3`` the standard Gell-Mann list.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise InvalidDimensionError(f"SU(N) needs an integer N >= 2, got {n!r}")
    n = int(n)
    gens = []
    for m in range(2, n + 1):
        col = m - 1
        for row in range(col):
            sym = np.zeros((n, n), dtype=complex)
            sym[row, col] = sym[col, row] = 1.0
            gens.append(sym)
            anti = np.zeros((n, n), dtype=complex)
            anti[row, col] = -1j
            anti[col, row] = 1j
            gens.append(anti)
        diag = np.zeros(n)
        diag[: m - 1] = 1.0
        diag[m - 1] = -(m - 1)
        gens.append(np.sqrt(2.0 / (m * m - m)) * np.diag(diag).astype(complex))
    return SuNBasis(n, np.array(gens))


def _triple_traces(basis: SuNBasis):
    g = basis.generators
    prod = np.einsum("aij,bjk->abik", g, g)
    # Tr(L_a L_b L_c) = 2 (d_abc + i f_abc)
    return np.einsum("abik,cki->abc", prod, g)


def compute_structure_constants(basis: SuNBasis) -> StructureConstants:
    """``f_ijk = Tr([L_i, L_j] L_k) / 4i``, kept where ``|f| > 1e-12``."""
    t = _triple_traces(basis)
    f = ((t - np.transpose(t, (1, 0, 2))) / 4j).real
    m = basis.size
    entries = {}
    for i, j, k in itertools.combinations(range(m), 3):
        if abs(f[i, j, k]) > ZERO_TOL:
            entries[(i + 1, j + 1, k + 1)] = float(f[i, j, k])
    return StructureConstants(basis.n, entries)


def compute_symmetric_constants(basis: SuNBasis) -> StructureConstants:
    """``d_ijk = Tr({L_i, L_j} L_k) / 4``; identically zero for SU(2)."""
    t = _triple_traces(basis)
    d = ((t + np.transpose(t, (1, 0, 2))) / 4).real
    m = basis.size
    entries = {}
    for i, j, k in itertools.combinations_with_replacement(range(m), 3):
        if abs(d[i, j, k]) > ZERO_TOL:
            entries[(i + 1, j + 1, k + 1)] = float(d[i, j, k])
    return StructureConstants(basis.n, entries, symmetric=True)


@lru_cache(maxsize=16)
def su_algebra(n: int):
    """Cached ``(basis, f, d)`` for SU(n)."""
    basis = build_generators(n)
    return basis, compute_structure_constants(basis), compute_symmetric_constants(basis)


def closure_residual(basis: SuNBasis, f: StructureConstants) -> float:
    """Max over pairs of ``||[L_i, L_j] - 2i f_ijk L_k||_F``."""
    if basis.n != f.n:
        raise DimensionMismatchError(f"basis is SU({basis.n}) but constants are SU({f.n})")
    g = basis.generators
    comm = np.einsum("aij,bjk->abik", g, g)
    comm = comm - np.transpose(comm, (1, 0, 2, 3))
    rhs = 2j * np.einsum("abc,cik->abik", f.dense(), g)
    return float(np.sqrt((np.abs(comm - rhs) ** 2).sum(axis=(2, 3))).max())


def jacobi_residual(f: StructureConstants) -> float:
    """Max |f_ade f_bcd + f_bde f_cad + f_cde f_abd| over all a, b, c, e."""
    F = f.dense()
    t1 = np.einsum("ade,bcd->abce", F, F)
    t2 = np.einsum("bde,cad->abce", F, F)
    t3 = np.einsum("cde,abd->abce", F, F)
    return float(np.abs(t1 + t2 + t3).max()) if F.size else 0.0


def levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for i, j, k in itertools.permutations(range(3)):
        eps[i, j, k] = _permutation_sign((i, j, k))
    return eps


PAULI = build_generators(2).generators


def algebra_to_dict(basis: SuNBasis, f: StructureConstants, d: StructureConstants) -> dict:
    """Generators (real and imaginary parts) and nonzero constants as plain lists."""
    g = basis.generators
    return {
        "n": basis.n,
        "generators_real": g.real.tolist(),
        "generators_imag": g.imag.tolist(),
        "f": [[i, j, k, v] for (i, j, k), v in sorted(f.items())],
        "d": [[i, j, k, v] for (i, j, k), v in sorted(d.items())],
    }


def algebra_from_dict(data: dict):
    """Inverse of :func:`algebra_to_dict`, returning ``(basis, f, d)``."""
    n = int(data["n"])
    g = np.array(data["generators_real"], dtype=float) + 1j * np.array(data["generators_imag"], dtype=float)
    if g.shape != (n * n - 1, n, n):
        raise DimensionMismatchError(f"generators have shape {g.shape}, expected SU({n})")
    f = {tuple(int(x) for x in e[:3]): float(e[3]) for e in data["f"]}
    d = {tuple(int(x) for x in e[:3]): float(e[3]) for e in data["d"]}
    return SuNBasis(n, g), StructureConstants(n, f), StructureConstants(n, d, symmetric=True)
