"""SIV host-vector reaction terms, parameters and state containers."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

COMPARTMENTS = ("S", "I", "V")


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``nx`` x ``ny`` intervals on ``[xl, xh] x [yl, yh]``."""

    nx: int
    ny: int
    xl: float = 0.0
    xh: float = 1.0
    yl: float = 0.0
    yh: float = 1.0

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs at least 2 intervals per direction")
        if not (self.xh > self.xl and self.yh > self.yl):
            raise ValueError("domain bounds must be increasing")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx + 1, self.ny + 1)

    @property
    def hx(self) -> float:
        return (self.xh - self.xl) / self.nx

    @property
    def hy(self) -> float:
        return (self.yh - self.yl) / self.ny

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.xl, self.xh, self.nx + 1)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(self.yl, self.yh, self.ny + 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)


@dataclass(frozen=True)
class SivParams:
    """Rates (per day) and diffusion coefficients ``a`` (x) and ``b`` (y).

    Diffusion coefficients may be scalars or full-grid arrays.
    """

    mu: float
    beta: float
    gamma: float
    theta: float
    nu: float
    a_s: float | np.ndarray = 0.0
    b_s: float | np.ndarray = 0.0
    a_i: float | np.ndarray = 0.0
    b_i: float | np.ndarray = 0.0
    a_v: float | np.ndarray = 0.0
    b_v: float | np.ndarray = 0.0

    def __post_init__(self):
        for name in ("mu", "beta", "gamma", "theta", "nu"):
            if getattr(self, name) < 0:
                raise ValueError(f"rate {name} must be non-negative")
        for name in ("a_s", "b_s", "a_i", "b_i", "a_v", "b_v"):
            if np.any(np.asarray(getattr(self, name)) < 0):
                raise ValueError(f"diffusion coefficient {name} must be non-negative")

    def diffusion(self, compartment: str) -> tuple:
        c = compartment.lower()
        return getattr(self, f"a_{c}"), getattr(self, f"b_{c}")

    def with_diffusion(self, a, b=None) -> "SivParams":
        """Same rates, with every compartment diffusing by ``a`` in x and ``b`` in y."""
        b = a if b is None else b
        return replace(self, a_s=a, b_s=b, a_i=a, b_i=b, a_v=a, b_v=b)

    def without_reaction(self) -> "SivParams":
        return replace(self, mu=0.0, beta=0.0, gamma=0.0, theta=0.0, nu=0.0)


@dataclass
class SivState:
    grid: Grid
    S: np.ndarray
    I: np.ndarray
    V: np.ndarray
    time: float = field(default=0.0)

    def __post_init__(self):
        for name in COMPARTMENTS:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != self.grid.shape:
                raise ValueError(
                    f"field {name} has shape {arr.shape}, grid expects {self.grid.shape}"
                )
            setattr(self, name, arr)

    def __getitem__(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def fields(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.S, self.I, self.V

    def copy(self) -> "SivState":
        return SivState(self.grid, self.S.copy(), self.I.copy(), self.V.copy(), self.time)

    @classmethod
    def zeros(cls, grid: Grid) -> "SivState":
        return cls(grid, grid.zeros(), grid.zeros(), grid.zeros())

    @classmethod
    def uniform(cls, grid: Grid, s: float, i: float, v: float, boundary: float = 0.0) -> "SivState":
        """Spatially uniform interior values with a constant boundary value."""
        out = []
        for val in (s, i, v):
            f = np.full(grid.shape, float(val))
            set_boundary(f, boundary)
            out.append(f)
        return cls(grid, *out)


def set_boundary(f: np.ndarray, value=0.0) -> np.ndarray:
    f[0, :] = value
    f[-1, :] = value
    f[:, 0] = value
    f[:, -1] = value
    return f


def copy_boundary(dst: np.ndarray, src: np.ndarray) -> np.ndarray:
    dst[0, :] = src[0, :]
    dst[-1, :] = src[-1, :]
    dst[:, 0] = src[:, 0]
    dst[:, -1] = src[:, -1]
    return dst


def reaction_terms(p: SivParams, s, i, v):
    """Right-hand side ``(g_S, g_I, g_V)`` of the SIV system; works on scalars or arrays."""
    infection = p.beta * s * v
    g_s = p.mu * (1 - s) - infection
    g_i = infection - (p.mu + p.gamma) * i
    g_v = p.theta * (1 - v) * i - p.nu * v
    return g_s, g_i, g_v


def reaction_field(p: SivParams, state: SivState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pointwise reaction terms on interior cells; boundary cells carry 0."""
    shapes = {f.shape for f in state.fields()}
    if len(shapes) != 1:
        raise ValueError("compartment fields do not share a grid")
    out = []
    inner = [f[1:-1, 1:-1] for f in state.fields()]
    for g in reaction_terms(p, *inner):
        full = np.zeros(state.grid.shape)
        full[1:-1, 1:-1] = g
        out.append(full)
    return tuple(out)


def ode_rhs(t: float, y, p: SivParams) -> np.ndarray:
    """Well-mixed SIV system as a ``scipy.integrate.solve_ivp`` right-hand side."""
    return np.array(reaction_terms(p, y[0], y[1], y[2]))


def endemic_equilibrium(p: SivParams) -> tuple[float, float, float]:
    """Closed-form endemic fixed point ``(s, i, v)`` with ``i > 0``.

    Raises ``ValueError`` when the basic reproduction number is at most one.
    """
    r0 = p.beta * p.theta / ((p.mu + p.gamma) * p.nu)
    if r0 <= 1:
        raise ValueError(f"no endemic equilibrium: R0 = {r0:.4g} <= 1")
    # from g_I = 0 and g_V = 0:  v = theta i / (theta i + nu),  beta s v = (mu+gamma) i
    # with g_S = 0:  mu (1 - s) = (mu + gamma) i
    m = p.mu + p.gamma
    i = p.mu * (p.beta * p.theta - m * p.nu) / (m * p.theta * (p.mu + p.beta))
    s = 1 - m * i / p.mu
    v = p.theta * i / (p.theta * i + p.nu)
    return s, i, v
