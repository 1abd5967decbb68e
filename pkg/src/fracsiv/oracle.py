"""Reference solvers used to verify the ADI stepper.

Everything here assembles dense global operators and is meant for small
grids only.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .adi import SchemeConfig, half_step_reaction
from .grunwald import grunwald_weights, stencil_matrix
from .siv import COMPARTMENTS, Grid, SivParams, SivState, copy_boundary, reaction_field

log = logging.getLogger(__name__)

MAX_UNKNOWNS = 4096


class GridTooLargeError(ValueError):
    pass


class InstabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class GlobalSystem:
    """Dense CN matrix ``I - dt/2 (Lx + Ly)`` on row-major interior ordering.

    ``operator`` maps the full flattened grid (boundary included) to the
    interior; ``matrix`` is the interior block of ``I - dt/2 operator``.
    """

    operator: np.ndarray
    matrix: np.ndarray
    grid: Grid

    @property
    def interior(self) -> np.ndarray:
        """Flat indices of interior points in the full grid, in row-major order."""
        nx, ny = self.grid.nx, self.grid.ny
        i, j = np.meshgrid(np.arange(1, nx), np.arange(1, ny), indexing="ij")
        return (i * (ny + 1) + j).ravel()


def _select_interior(n: int) -> np.ndarray:
    return np.eye(n + 1)[1:-1]


def global_operator(cfg: SchemeConfig, a, b) -> np.ndarray:
    """``Lx + Ly`` as a dense ``(nx-1)(ny-1) x (nx+1)(ny+1)`` matrix."""
    grid = cfg.grid
    nx, ny = grid.nx, grid.ny
    if (nx - 1) * (ny - 1) > MAX_UNKNOWNS:
        raise GridTooLargeError(
            f"{(nx - 1) * (ny - 1)} unknowns exceed the dense oracle limit of {MAX_UNKNOWNS}"
        )
    wx = grunwald_weights(cfg.alpha1, nx + 2)
    wy = grunwald_weights(cfg.alpha2, ny + 2)
    Wx = (1 - cfg.r1) * stencil_matrix(wx, nx, "minus") + cfg.r1 * stencil_matrix(wx, nx, "plus")
    Wy = (1 - cfg.r2) * stencil_matrix(wy, ny, "minus") + cfg.r2 * stencil_matrix(wy, ny, "plus")
    ax = np.broadcast_to(np.asarray(a, float), grid.shape)[1:-1, 1:-1] / grid.hx**cfg.alpha1
    by = np.broadcast_to(np.asarray(b, float), grid.shape)[1:-1, 1:-1] / grid.hy**cfg.alpha2
    Lx = np.kron(Wx, _select_interior(ny)) * ax.reshape(-1, 1)
    Ly = np.kron(_select_interior(nx), Wy) * by.reshape(-1, 1)
    return Lx + Ly


def assemble_global(cfg: SchemeConfig, a, b) -> GlobalSystem:
    L = global_operator(cfg, a, b)
    sys = GlobalSystem(L, np.empty((0, 0)), cfg.grid)
    M = np.eye(L.shape[0]) - 0.5 * cfg.dt * L[:, sys.interior]
    return GlobalSystem(L, M, cfg.grid)


def unsplit_cn_step(
    p: SivParams, cfg: SchemeConfig, state_n: SivState, boundary_next: SivState | None = None
) -> SivState:
    """One unfactorized Crank-Nicolson step with the ADI half-step reaction predictor."""
    if boundary_next is None:
        boundary_next = state_n
    reaction = half_step_reaction(p, state_n, cfg.dt)
    out = []
    for c, Xn, Xb, g in zip(COMPARTMENTS, state_n.fields(), boundary_next.fields(), reaction):
        sys = assemble_global(cfg, *p.diffusion(c))
        idx = sys.interior
        # boundary of X^{n+1} is known; move its contribution to the right-hand side
        Xb_only = np.zeros(cfg.grid.shape)
        copy_boundary(Xb_only, Xb)
        rhs = (
            Xn.ravel()[idx]
            + 0.5 * cfg.dt * (sys.operator @ Xn.ravel())
            + 0.5 * cfg.dt * (sys.operator @ Xb_only.ravel())
            + cfg.dt * g.ravel()[idx]
        )
        lu = lu_factor(sys.matrix)
        new = np.zeros(cfg.grid.shape)
        copy_boundary(new, Xb)
        new.ravel()[idx] = lu_solve(lu, rhs)
        out.append(new)
    return SivState(cfg.grid, *out, time=state_n.time + cfg.dt)


def explicit_rhs(p: SivParams, cfg: SchemeConfig, state: SivState, operators=None):
    if operators is None:
        operators = {c: global_operator(cfg, *p.diffusion(c)) for c in COMPARTMENTS}
    g = reaction_field(p, state)
    out = []
    for c, X, gx in zip(COMPARTMENTS, state.fields(), g):
        d = np.zeros(cfg.grid.shape)
        d[1:-1, 1:-1] = (operators[c] @ X.ravel()).reshape(cfg.nx - 1, cfg.ny - 1)
        out.append(d + gx)
    return out


def stable_dt_bound(p: SivParams, cfg: SchemeConfig) -> float:
    """Heuristic forward-Euler bound ``h^alpha / (4 max coeff)``."""
    grid = cfg.grid
    bounds = [np.inf]
    for c in COMPARTMENTS:
        a, b = p.diffusion(c)
        if np.max(a) > 0:
            bounds.append(grid.hx**cfg.alpha1 / (4 * np.max(a)))
        if np.max(b) > 0:
            bounds.append(grid.hy**cfg.alpha2 / (4 * np.max(b)))
    return min(bounds)


def explicit_reference(
    p: SivParams, cfg: SchemeConfig, state_0: SivState, t_end: float, dt_fine: float
) -> SivState:
    """Forward-Euler integration to ``t_end`` with the same spatial operators.

    Boundary values are held at those of ``state_0``.
    """
    if dt_fine <= 0:
        raise ValueError("dt_fine must be positive")
    bound = stable_dt_bound(p, cfg)
    if dt_fine > bound:
        log.warning("dt_fine=%g exceeds the explicit stability heuristic %g", dt_fine, bound)
    operators = {c: global_operator(cfg, *p.diffusion(c)) for c in COMPARTMENTS}
    n_steps = int(np.ceil(t_end / dt_fine - 1e-9))
    h = t_end / n_steps if n_steps else 0.0
    state = state_0.copy()
    for n in range(n_steps):
        rates = explicit_rhs(p, cfg, state, operators)
        fields = [X + h * d for X, d in zip(state.fields(), rates)]
        state = SivState(cfg.grid, *fields, time=state.time + h)
        peak = max(np.max(np.abs(f)) for f in fields)
        if not np.isfinite(peak) or peak > 1e6:
            raise InstabilityError(
                f"explicit reference blew up at step {n + 1} (t={state.time:g}, |u|max={peak:.3g}); "
                f"reduce dt_fine below {bound:.3g}"
            )
    return state


def classical_mode_amplitude(cfg: SchemeConfig, a: float, b: float, n_steps: int, scheme: str = "adi"):
    """Amplitude of the ``sin(pi x) sin(pi y)`` mode on the unit square after ``n_steps``.

    For ``alpha = 2`` the mode is an exact eigenvector of the discrete
    operators, so its amplitude follows from the discrete eigenvalues alone.
    ``scheme`` is ``"adi"`` (product of 1D CN factors), ``"cn"`` (unsplit) or
    ``"exact"`` (continuous ``exp(-pi^2 (a + b) t)``).
    """
    grid = cfg.grid
    lx = a * 4 / grid.hx**2 * np.sin(np.pi * grid.hx / (2 * (grid.xh - grid.xl))) ** 2
    ly = b * 4 / grid.hy**2 * np.sin(np.pi * grid.hy / (2 * (grid.yh - grid.yl))) ** 2
    k = 0.5 * cfg.dt
    if scheme == "adi":
        factor = (1 - k * lx) * (1 - k * ly) / ((1 + k * lx) * (1 + k * ly))
    elif scheme == "cn":
        factor = (1 - k * (lx + ly)) / (1 + k * (lx + ly))
    elif scheme == "exact":
        Lx, Ly = grid.xh - grid.xl, grid.yh - grid.yl
        return float(np.exp(-np.pi**2 * (a / Lx**2 + b / Ly**2) * n_steps * cfg.dt))
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return float(factor**n_steps)
