"""Finite-difference estimates of the derivative matrices at t = 0.

Stencil weights come from the Taylor (Vandermonde) system on integer
offsets.  With ``stencil_halfwidth=None`` each derivative order m gets the
smallest symmetric window that is second-order accurate, halfwidth
``ceil(m / 2)`` (three points for m = 1, 2; five for m = 3, 4).  With an
explicit halfwidth p every order uses all ``2p + 1`` points, which gives
accuracy ``2 * (p - ceil(m / 2) + 1)``.

Central estimates of odd orders only involve odd Taylor terms of the data,
so on exact data they are antisymmetric up to rounding; likewise even
orders come out symmetric.  One-sided stencils have no such property.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import factorial
from pathlib import Path

import numpy as np

from .dynamics import Trajectory
from .errors import (AlreadyProjectedError, InsufficientSamplesError,
                     NonUniformGridError)

GRID_TOL = 1e-12


@dataclass(frozen=True)
class DerivativeStack:
    """``mats[n-1]`` holds the 3 x 3 matrix of n-th derivatives at t = 0."""

    mats: np.ndarray = field(repr=False)
    projected: bool = False

    def __post_init__(self):
        mats = np.asarray(self.mats, dtype=float)
        if mats.ndim != 3 or mats.shape[1:] != (3, 3) or mats.shape[0] < 1:
            raise ValueError(f"expected an (M, 3, 3) array, got {mats.shape}")
        object.__setattr__(self, "mats", mats)

    @property
    def order(self) -> int:
        return self.mats.shape[0]

    def __getitem__(self, n: int) -> np.ndarray:
        """The n-th derivative matrix (1-based)."""
        if not 1 <= n <= self.order:
            raise IndexError(f"derivative order {n} not in stack of order {self.order}")
        return self.mats[n - 1]

    def truncate(self, order: int) -> "DerivativeStack":
        return DerivativeStack(self.mats[:order], self.projected)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "projected": self.projected,
            "matrices": [m.reshape(-1).tolist() for m in self.mats],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DerivativeStack":
        mats = np.array(data["matrices"], dtype=float).reshape(-1, 3, 3)
        if mats.shape[0] != data["order"]:
            raise ValueError(f"order {data['order']} but {mats.shape[0]} matrices")
        return cls(mats, bool(data.get("projected", False)))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "DerivativeStack":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def stencil_weights(offsets, order: int) -> np.ndarray:
    """Weights w with ``sum_i w_i y(x_i) ~ y^(order)(0)`` for unit spacing."""
    offsets = np.asarray(offsets, dtype=float)
    if order >= offsets.size:
        raise ValueError(f"{offsets.size} points cannot resolve derivative order {order}")
    powers = np.vander(offsets, offsets.size, increasing=True).T
    rhs = np.zeros(offsets.size)
    rhs[order] = factorial(order)
    return np.linalg.solve(powers, rhs)


def central_halfwidth(order: int, stencil_halfwidth: int | None) -> int:
    need = (order + 1) // 2
    if stencil_halfwidth is None:
        return need
    if stencil_halfwidth < need:
        raise ValueError(
            f"halfwidth {stencil_halfwidth} too small for derivative order {order} "
            f"(needs >= {need})")
    return stencil_halfwidth


def accuracy_order(order: int, stencil_halfwidth: int | None) -> int:
    """Truncation order of the central stencil used for ``order``."""
    p = central_halfwidth(order, stencil_halfwidth)
    return 2 * (p - (order + 1) // 2 + 1)


def _grid_index(traj: Trajectory) -> dict:
    times, dt = traj.times, traj.dt
    if times.size > 1:
        steps = np.diff(times)
        slack = GRID_TOL * dt + 8 * np.finfo(float).eps * np.abs(times).max()
        if np.abs(steps - dt).max() > slack:
            raise NonUniformGridError(
                f"time grid is not uniform with step {dt} "
                f"(worst deviation {np.abs(steps - dt).max():.3e})")
    k = np.rint(times / dt).astype(int)
    if np.abs(times - k * dt).max() > GRID_TOL * dt + 8 * np.finfo(float).eps * np.abs(times).max():
        raise NonUniformGridError("time grid is not aligned with t = 0")
    return {int(step): i for i, step in enumerate(k)}


def estimate_derivatives(traj: Trajectory, order: int, stencil_halfwidth: int | None = None,
                         stride: int = 1, one_sided: bool | None = None) -> DerivativeStack:
    """Derivative matrices of orders 1..order at t = 0.

    ``stride`` spaces the stencil points ``stride`` samples apart, so the
    effective step is ``stride * dt``.  Dense, exact data usually want a
    stride well above one for orders >= 4, where rounding error grows like
    ``eps / h**order``.  By default central stencils are used when the
    samples on both sides of t = 0 exist and forward ones otherwise; pass
    ``one_sided`` to force either choice.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    index = _grid_index(traj)
    h = stride * traj.dt
    mats = np.empty((order, 3, 3))
    for m in range(1, order + 1):
        p = central_halfwidth(m, stencil_halfwidth)
        central = np.arange(-p, p + 1)
        use_forward = one_sided
        if use_forward is None:
            use_forward = not all(int(s) * stride in index for s in central)
        if use_forward:
            offsets = np.arange(m + accuracy_order(m, stencil_halfwidth))
        else:
            offsets = central
        missing = [int(s) * stride for s in offsets if int(s) * stride not in index]
        if missing:
            raise InsufficientSamplesError(
                f"derivative order {m} needs samples at t = k*dt for k in "
                f"[{offsets[0] * stride}, {offsets[-1] * stride}] (stride {stride}); "
                f"missing k = {missing[0]}"
                + (f" .. {missing[-1]}" if len(missing) > 1 else "")
                + f", trajectory covers k in [{min(index)}, {max(index)}]")
        rows = [index[int(s) * stride] for s in offsets]
        w = stencil_weights(offsets, m)
        mats[m - 1] = np.tensordot(w, traj.values[rows], axes=1) / h ** m
    return DerivativeStack(mats, projected=False)


def symmetry_project(stack: DerivativeStack) -> DerivativeStack:
    """Antisymmetrise odd orders and symmetrise even orders."""
    if stack.projected:
        raise AlreadyProjectedError("derivative stack is already projected")
    out = np.empty_like(stack.mats)
    for i, m in enumerate(stack.mats):
        sign = -1.0 if (i + 1) % 2 else 1.0
        out[i] = 0.5 * (m + sign * m.T)
    return DerivativeStack(out, projected=True)


def symmetry_defect(stack: DerivativeStack) -> np.ndarray:
    """Per order, the max entry of the part removed by :func:`symmetry_project`."""
    out = []
    for i, m in enumerate(stack.mats):
        sign = 1.0 if (i + 1) % 2 else -1.0
        out.append(np.abs(0.5 * (m + sign * m.T)).max())
    return np.array(out)
