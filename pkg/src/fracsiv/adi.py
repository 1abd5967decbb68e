"""Crank-Nicolson Peaceman-Rachford ADI stepping for the fractional SIV system.

One step advances every compartment ``X`` through

    (1 - dt/2 Lx) X*      = (1 + dt/2 Ly) X^n + dt/2 g_X
    (1 - dt/2 Ly) X^{n+1} = (1 + dt/2 Lx) X*  + dt/2 g_X

where ``Lx = a/hx^a1 [(1-r1) d^- + r1 d^+]`` and likewise for ``Ly``, and
``g_X`` is the reaction evaluated at a predicted half-step state.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .grunwald import FractionalOperator, grunwald_weights, stencil_matrix
from .implicit import SliceSystem, SolverError, build_slice_system, solve_slice
from .siv import (
    COMPARTMENTS,
    Grid,
    SivParams,
    SivState,
    copy_boundary,
    reaction_field,
    reaction_terms,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SchemeConfig:
    """Discretization settings.

    ``nx`` and ``ny`` count grid intervals, so each direction has
    ``nx - 1`` (``ny - 1``) unknowns between the Dirichlet boundaries.
    ``inner_iterations`` > 0 re-evaluates the half-step reaction at the
    average of the old and new states that many extra times.
    """

    alpha1: float = 2.0
    alpha2: float = 2.0
    r1: float = 0.5
    r2: float = 0.5
    dt: float = 0.1
    nx: int = 32
    ny: int = 32
    domain: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)
    inner_iterations: int = 0

    def __post_init__(self):
        for name in ("alpha1", "alpha2"):
            a = getattr(self, name)
            if not 1.0 < a <= 2.0:
                raise ValueError(f"{name} must lie in (1, 2], got {a}")
        for name in ("r1", "r2"):
            r = getattr(self, name)
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.inner_iterations < 0:
            raise ValueError("inner_iterations must be non-negative")
        object.__setattr__(self, "domain", tuple(float(v) for v in self.domain))
        self.grid  # validates sizes and bounds

    @property
    def grid(self) -> Grid:
        return Grid(self.nx, self.ny, *self.domain)


def _coeff_field(c, grid: Grid) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim == 0:
        return np.full(grid.shape, float(c))
    if c.shape != grid.shape:
        raise ValueError(f"coefficient field shape {c.shape} != grid shape {grid.shape}")
    return c


def _params_key(p: SivParams) -> tuple:
    return tuple(
        (np.shape(v), np.asarray(v, dtype=float).tobytes()) for v in vars(p).values()
    )


class _CompartmentOps:
    """Cached operators and implicit systems for one compartment."""

    def __init__(self, cfg: SchemeConfig, a, b, wx, wy):
        grid = cfg.grid
        nx, ny = grid.nx, grid.ny
        self.a = _coeff_field(a, grid)
        self.b = _coeff_field(b, grid)
        self.ops = {
            ("x", side): FractionalOperator(cfg.alpha1, side, "x", grid.hx, self.a)
            for side in ("minus", "plus")
        }
        self.ops.update(
            {
                ("y", side): FractionalOperator(cfg.alpha2, side, "y", grid.hy, self.b)
                for side in ("minus", "plus")
            }
        )
        # unscaled two-sided stencils acting on full slices
        self.Wx = (1 - cfg.r1) * stencil_matrix(wx, nx, "minus") + cfg.r1 * stencil_matrix(
            wx, nx, "plus"
        )
        self.Wy = (1 - cfg.r2) * stencil_matrix(wy, ny, "minus") + cfg.r2 * stencil_matrix(
            wy, ny, "plus"
        )
        self.ax = self.a / grid.hx**cfg.alpha1
        self.by = self.b / grid.hy**cfg.alpha2

        self.x_systems = self._systems(cfg, "x", self.a, cfg.r1, wx, nx, ny)
        self.y_systems = self._systems(cfg, "y", self.b, cfg.r2, wy, ny, nx)

    def _systems(self, cfg, axis, coeff, r, w, n, n_other):
        """Factorizations grouped by slice: ``[(system, slice positions), ...]``.

        Slices whose interior coefficients are identical share one factorization.
        """
        groups: dict[bytes, tuple[SliceSystem, list[int]]] = {}
        for k in range(1, n_other):
            c = coeff[1:-1, k] if axis == "x" else coeff[k, 1:-1]
            key = c.tobytes()
            if key not in groups:
                sys = build_slice_system(
                    axis, k, cfg.dt, r, self.ops[(axis, "minus")], self.ops[(axis, "plus")], w, n
                )
                groups[key] = (sys, [])
            groups[key][1].append(k - 1)
        return [(sys, np.array(cols)) for sys, cols in groups.values()]

    def apply_x(self, X: np.ndarray) -> np.ndarray:
        """``Lx X`` at interior points, boundary values of ``X`` included."""
        return (self.Wx @ X[:, 1:-1]) * self.ax[1:-1, 1:-1]

    def apply_y(self, X: np.ndarray) -> np.ndarray:
        return (X[1:-1, :] @ self.Wy.T) * self.by[1:-1, 1:-1]


class AdiWorkspace:
    """Factorizations, stencils and scratch space for one scheme and parameter set.

    The workspace does not track changes to its inputs; call :meth:`rebuild`
    after changing ``dt``, orders, weights or coefficients.
    """

    def __init__(self, cfg: SchemeConfig, params: SivParams, threads: int = 1):
        self.threads = max(1, int(threads))
        self._pool = None
        self.rebuild(cfg, params)

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def rebuild(self, cfg: SchemeConfig, params: SivParams) -> None:
        self.cfg = cfg
        self.params = params
        grid = cfg.grid
        count = max(grid.nx, grid.ny) + 2
        self.wx = grunwald_weights(cfg.alpha1, count)
        self.wy = self.wx if cfg.alpha2 == cfg.alpha1 else grunwald_weights(cfg.alpha2, count)
        self.ops = {
            c: _CompartmentOps(cfg, *params.diffusion(c), self.wx, self.wy)
            for c in COMPARTMENTS
        }
        self.star = {c: grid.zeros() for c in COMPARTMENTS}

    def check(self, cfg: SchemeConfig, params: SivParams) -> None:
        if cfg is not self.cfg and cfg != self.cfg:
            raise ValueError("workspace was built for a different scheme; call rebuild()")
        if params is not self.params and _params_key(params) != _params_key(self.params):
            raise ValueError("workspace was built for different parameters; call rebuild()")

    def _solve(self, systems, rhs: np.ndarray, compartment: str, axis: str) -> np.ndarray:
        """Solve every slice; ``rhs`` holds one slice per column."""
        try:
            if len(systems) == 1:
                return solve_slice(systems[0][0], rhs)
            out = np.empty_like(rhs)
            solve = lambda group: solve_slice(group[0], rhs[:, group[1]])
            if self.threads > 1:
                if self._pool is None:
                    self._pool = ThreadPoolExecutor(self.threads)
                results = list(self._pool.map(solve, systems))
            else:
                results = [solve(g) for g in systems]
            for (_, cols), u in zip(systems, results):
                out[:, cols] = u
            return out
        except (SolverError, np.linalg.LinAlgError, ValueError) as exc:
            raise SolverError(f"{axis}-sweep failed for compartment {compartment}: {exc}") from exc


def half_step_reaction(p: SivParams, state_n: SivState, dt: float):
    """Reaction at the explicit-Euler predictor ``X + dt/2 g(X)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    inner = [f[1:-1, 1:-1] for f in state_n.fields()]
    g = reaction_terms(p, *inner)
    pred = [x + 0.5 * dt * gx for x, gx in zip(inner, g)]
    out = []
    for gx in reaction_terms(p, *pred):
        full = state_n.grid.zeros()
        full[1:-1, 1:-1] = gx
        out.append(full)
    return tuple(out)


def intermediate_boundary(
    ws: AdiWorkspace, cfg: SchemeConfig, compartment: str, field_n: np.ndarray, field_np1: np.ndarray
) -> np.ndarray:
    """Values of ``X*`` on the x-boundary columns ``i = 0`` and ``i = nx``.

    Evaluates ``2 X* = (1 - dt/2 Ly) X^{n+1} + (1 + dt/2 Ly) X^n`` along each
    boundary column.  Returns shape ``(2, ny - 1)`` for interior ``j``.
    """
    ops = ws.ops[compartment]
    cols = [0, cfg.nx]
    xn, xnp1 = field_n[cols, :], field_np1[cols, :]
    if not (xn.any() or xnp1.any()):
        return np.zeros((2, cfg.ny - 1))
    by = ops.by[cols, 1:-1]
    ly_n = (xn @ ops.Wy.T) * by
    ly_np1 = (xnp1 @ ops.Wy.T) * by
    half = 0.5 * cfg.dt
    return 0.5 * ((xnp1[:, 1:-1] - half * ly_np1) + (xn[:, 1:-1] + half * ly_n))


def sweep_x(ws: AdiWorkspace, cfg: SchemeConfig, state_n: SivState, reaction_half, star_boundary=None):
    """First half-step: implicit in x on every horizontal slice ``j = 1..ny-1``.

    ``star_boundary`` maps compartment -> ``(2, ny - 1)`` values of ``X*`` at
    ``i = 0`` and ``i = nx``; the default assumes time-constant boundary data.
    """
    half = 0.5 * cfg.dt
    out = []
    for c, Xn, g in zip(COMPARTMENTS, state_n.fields(), reaction_half):
        ops = ws.ops[c]
        if star_boundary is None:
            sb = intermediate_boundary(ws, cfg, c, Xn, Xn)
        else:
            sb = star_boundary[c]
        rhs = Xn[1:-1, 1:-1] + half * ops.apply_y(Xn) + half * g[1:-1, 1:-1]
        if sb.any():
            rhs += half * (ops.Wx[:, [0, -1]] @ sb) * ops.ax[1:-1, 1:-1]
        star = ws.star[c]
        star[...] = Xn
        star[0, 1:-1] = sb[0]
        star[-1, 1:-1] = sb[1]
        star[1:-1, 1:-1] = ws._solve(ops.x_systems, rhs, c, "x")
        out.append(star)
    return tuple(out)


def sweep_y(ws: AdiWorkspace, cfg: SchemeConfig, intermediates, reaction_half, boundary_next: SivState):
    """Second half-step: implicit in y on every vertical slice ``i = 1..nx-1``.

    Boundary values of the result are copied from ``boundary_next``.
    """
    half = 0.5 * cfg.dt
    out = []
    for c, Xs, g, Xb in zip(COMPARTMENTS, intermediates, reaction_half, boundary_next.fields()):
        ops = ws.ops[c]
        rhs = Xs[1:-1, 1:-1] + half * ops.apply_x(Xs) + half * g[1:-1, 1:-1]
        yb = Xb[1:-1, [0, -1]]
        if yb.any():
            rhs += half * (yb @ ops.Wy[:, [0, -1]].T) * ops.by[1:-1, 1:-1]
        new = np.empty(cfg.grid.shape)
        copy_boundary(new, Xb)
        new[1:-1, 1:-1] = ws._solve(ops.y_systems, rhs.T, c, "y").T
        out.append(new)
    return SivState(cfg.grid, *out, time=boundary_next.time)


def step(
    ws: AdiWorkspace,
    cfg: SchemeConfig,
    p: SivParams,
    state_n: SivState,
    boundary_next: SivState | None = None,
) -> SivState:
    """Advance ``state_n`` by one time step.

    ``boundary_next`` supplies Dirichlet values at ``t + dt``; by default the
    boundary values of ``state_n`` are held fixed.
    """
    ws.check(cfg, p)
    if boundary_next is None:
        boundary_next = state_n
    reaction = half_step_reaction(p, state_n, cfg.dt)
    new = _advance(ws, cfg, state_n, reaction, boundary_next)
    for _ in range(cfg.inner_iterations):
        mid = SivState(
            cfg.grid, *[(a + b) / 2 for a, b in zip(state_n.fields(), new.fields())]
        )
        reaction = reaction_field(p, mid)
        new = _advance(ws, cfg, state_n, reaction, boundary_next)
    new.time = state_n.time + cfg.dt
    return new


def _advance(ws, cfg, state_n, reaction, boundary_next):
    sb = {
        c: intermediate_boundary(ws, cfg, c, xn, xb)
        for c, xn, xb in zip(COMPARTMENTS, state_n.fields(), boundary_next.fields())
    }
    stars = sweep_x(ws, cfg, state_n, reaction, sb)
    return sweep_y(ws, cfg, stars, reaction, boundary_next)
