"""Per-slice implicit systems ``(I - dt/2 [(1-r) A^- + r A^+]) u = rhs``."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor
from scipy.linalg.lapack import dgetrs

from .grunwald import Axis, FractionalOperator, GrunwaldWeights, operator_matrix


class SolverError(RuntimeError):
    """A slice system could not be factorized or solved."""


@dataclass(frozen=True)
class SliceSystem:
    matrix: np.ndarray
    lu: tuple = field(repr=False)
    axis: Axis
    slice_index: int

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def combined_operator(
    r: float,
    op_minus: FractionalOperator,
    op_plus: FractionalOperator,
    weights: GrunwaldWeights,
    slice_index: int,
    n: int,
) -> tuple[np.ndarray, np.ndarray]:
    """``(1-r) A^- + r A^+`` over interior points and its boundary-load columns."""
    A_m, load_m = operator_matrix(op_minus, weights, slice_index, n)
    A_p, load_p = operator_matrix(op_plus, weights, slice_index, n)
    return (1.0 - r) * A_m + r * A_p, (1.0 - r) * load_m + r * load_p


def factorize(matrix: np.ndarray, axis: Axis = "x", slice_index: int = 0) -> SliceSystem:
    """LU-factorize ``matrix`` with partial pivoting, rejecting singular systems."""
    matrix = np.asarray(matrix, dtype=float)
    with warnings.catch_warnings():
        # singularity is reported below as SolverError
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(matrix, check_finite=True)
    diag = np.abs(np.diag(lu))
    if diag.size and (diag.min() == 0.0 or diag.min() <= 1e-14 * diag.max()):
        raise SolverError(
            f"singular {axis}-slice system at index {slice_index}; "
            "time step or coefficients outside the usable range"
        )
    matrix.setflags(write=False)
    return SliceSystem(matrix, (lu, piv), axis, slice_index)


def build_slice_system(
    axis: Axis,
    slice_index: int,
    dt: float,
    r: float,
    op_minus: FractionalOperator,
    op_plus: FractionalOperator,
    weights: GrunwaldWeights,
    n: int,
) -> SliceSystem:
    """Assemble and factorize the implicit half-step matrix for one slice.

    ``n`` is the number of intervals along ``axis``.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"weight r must lie in [0, 1], got {r}")
    if op_minus.axis != axis or op_plus.axis != axis:
        raise ValueError("operators do not act along the requested axis")
    L, _ = combined_operator(r, op_minus, op_plus, weights, slice_index, n)
    M = np.eye(n - 1) - (dt / 2) * L
    return factorize(M, axis, slice_index)


def solve_slice(system: SliceSystem, rhs: np.ndarray) -> np.ndarray:
    """Solve ``system`` for one right-hand side or a block of column right-hand sides."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != system.size:
        raise ValueError(f"rhs has {rhs.shape[0]} rows, system has {system.size}")
    lu, piv = system.lu
    x, info = dgetrs(lu, piv, rhs)
    if info != 0:
        raise SolverError(f"LAPACK getrs failed with info={info}")
    return x
