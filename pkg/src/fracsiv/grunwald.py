"""Shifted Grünwald-Letnikov weights and one-dimensional fractional operators.

Fields are numpy arrays of shape ``(nx + 1, ny + 1)`` indexed ``[i, j]``
with ``i`` along x and ``j`` along y; index 0 and the last index are the
Dirichlet boundary.  Points beyond the boundary are treated as zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Union

import numpy as np

Axis = Literal["x", "y"]
Side = Literal["minus", "plus"]

Coefficient = Union[float, np.ndarray]


@dataclass(frozen=True)
class GrunwaldWeights:
    """Coefficients ``g_k = (-1)^k binom(alpha, k)`` for ``k = 0..len-1``."""

    alpha: float
    coeffs: np.ndarray

    def __len__(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, k):
        return self.coeffs[k]


def _check_alpha(alpha: float) -> None:
    if not (1.0 < alpha <= 2.0):
        raise ValueError(f"fractional order must lie in (1, 2], got {alpha}")


def grunwald_weights(alpha: float, count: int) -> GrunwaldWeights:
    """Grünwald-Letnikov weights by the recurrence ``g_k = g_{k-1} (k-1-alpha)/k``.

    Parameters
    ----------
    alpha : float
        Fractional order, ``1 < alpha <= 2``.
    count : int
        Number of weights to return (at least 2).
    """
    _check_alpha(alpha)
    if count < 2:
        raise ValueError(f"need at least 2 weights, got {count}")
    g = np.empty(count)
    g[0] = 1.0
    for k in range(1, count):
        g[k] = g[k - 1] * ((k - 1 - alpha) / k)
    g.setflags(write=False)
    return GrunwaldWeights(float(alpha), g)


@dataclass(frozen=True)
class FractionalOperator:
    """One-sided shifted Grünwald operator along one axis.

    ``side="minus"`` sums toward increasing index (``u_{i-1}, u_i, u_{i+1}, ...``),
    ``side="plus"`` toward decreasing index (``u_{i+1}, u_i, u_{i-1}, ...``).
    ``coeff`` is either a scalar or a full-grid array of diffusion coefficients.
    """

    alpha: float
    side: Side
    axis: Axis
    spacing: float
    coeff: Coefficient = 1.0

    def __post_init__(self):
        _check_alpha(self.alpha)
        if self.side not in ("minus", "plus"):
            raise ValueError(f"unknown side {self.side!r}")
        if self.axis not in ("x", "y"):
            raise ValueError(f"unknown axis {self.axis!r}")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if np.any(np.asarray(self.coeff) < 0):
            raise ValueError("diffusion coefficients must be non-negative")

    @property
    def is_constant(self) -> bool:
        c = np.asarray(self.coeff)
        return c.ndim == 0 or bool(np.all(c == c.flat[0]))

    def slice_coeff(self, slice_index: int, n: int) -> np.ndarray:
        """Coefficients at the ``n - 1`` interior points of one slice."""
        c = np.asarray(self.coeff, dtype=float)
        if c.ndim == 0:
            return np.full(n - 1, float(c))
        if self.axis == "x":
            return c[1:-1, slice_index]
        return c[slice_index, 1:-1]

    def row_scale(self, slice_index: int, n: int) -> np.ndarray:
        """``coeff / spacing**alpha`` at the interior points of one slice."""
        return self.slice_coeff(slice_index, n) / self.spacing**self.alpha


def _extract_slice(op: FractionalOperator, field: np.ndarray, slice_index: int) -> np.ndarray:
    field = np.asarray(field, dtype=float)
    if field.ndim != 2:
        raise ValueError("field must be two-dimensional")
    c = np.asarray(op.coeff)
    if c.ndim == 2 and c.shape != field.shape:
        raise ValueError(f"coefficient shape {c.shape} does not match field {field.shape}")
    if op.axis == "x":
        if not 0 < slice_index < field.shape[1] - 1:
            raise IndexError(f"slice index {slice_index} is not an interior row")
        return field[:, slice_index]
    if not 0 < slice_index < field.shape[0] - 1:
        raise IndexError(f"slice index {slice_index} is not an interior column")
    return field[slice_index, :]


def apply_shifted(
    op: FractionalOperator, weights: GrunwaldWeights, field: np.ndarray, slice_index: int
) -> np.ndarray:
    """Apply ``op`` along one slice of ``field`` by direct summation.

    Returns the ``N - 1`` values at interior points of the slice, boundary
    values included in the sums.
    """
    u = _extract_slice(op, field, slice_index)
    n = len(u) - 1
    if len(weights) < n + 1:
        raise ValueError(f"need {n + 1} weights for a slice of {n + 1} points")
    g = weights.coeffs
    out = np.empty(n - 1)
    for i in range(1, n):
        if op.side == "minus":
            # sum_{k=0}^{N-i+1} g_k u_{i+k-1}
            out[i - 1] = np.dot(g[: n - i + 2], u[i - 1 :])
        else:
            # sum_{k=0}^{i+1} g_k u_{i-k+1}
            out[i - 1] = np.dot(g[: i + 2], u[i + 1 :: -1])
    return out * op.row_scale(slice_index, n)


def stencil_matrix(weights: GrunwaldWeights, n: int, side: Side) -> np.ndarray:
    """Unscaled ``(n - 1) x (n + 1)`` weight matrix acting on a full slice.

    Row ``i - 1`` holds the weights that produce interior point ``i`` from
    grid values ``u_0..u_n``.  Columns 0 and ``n`` are the boundary columns.
    """
    if len(weights) < n + 1:
        raise ValueError(f"need {n + 1} weights for a slice of {n + 1} points")
    g = weights.coeffs
    rows = np.arange(1, n)[:, None]
    cols = np.arange(n + 1)[None, :]
    k = cols - rows + 1 if side == "minus" else rows - cols + 1
    W = np.where(k >= 0, g[np.clip(k, 0, None)], 0.0)
    return W


def operator_matrix(
    op: FractionalOperator, weights: GrunwaldWeights, slice_index: int, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Assembled operator over interior points of one slice.

    Parameters
    ----------
    n : int
        Number of intervals along the operator's axis; the slice has
        ``n + 1`` points.

    Returns
    -------
    A : ndarray, shape (n - 1, n - 1)
        ``A[i, j] = coeff_i / h^alpha * g_{i-j+1}`` (plus side) or
        ``g_{j-i+1}`` (minus side).
    load : ndarray, shape (n - 1, 2)
        Scaled weights multiplying the boundary values ``u_0`` and ``u_n``.
    """
    W = stencil_matrix(weights, n, op.side)
    W = W * op.row_scale(slice_index, n)[:, None]
    return W[:, 1:-1], W[:, [0, -1]]
