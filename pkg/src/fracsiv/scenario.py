"""Scenario files, initial conditions, the simulation loop and snapshot output.

Scenario files are flat ``key = value`` text with ``#`` comments::

    # fractional demo
    alpha = 1.2
    nx = 64
    ny = 64
    dt = 0.25
    t_end = 180
    snapshot_times = 0, 60, 120, 180
    beta = 0.3

Recognized keys are listed in :data:`SCENARIO_KEYS`.
"""

from __future__ import annotations

import configparser
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .adi import AdiWorkspace, SchemeConfig, step
from .implicit import SolverError
from .oracle import unsplit_cn_step
from .siv import COMPARTMENTS, Grid, SivParams, SivState

log = logging.getLogger(__name__)

# Demo values chosen for this package, not taken from any publication.
DEFAULT_PARAMS = dict(mu=0.01, beta=0.3, gamma=0.1, theta=0.3, nu=0.1)
DEFAULT_DIFFUSION = 1e-5
DEFAULT_THRESHOLD = 1e-4

SCENARIO_KEYS = {
    "alpha": "fractional order for both directions (overridden by alpha1/alpha2)",
    "alpha1": "fractional order in x, 1 < alpha1 <= 2",
    "alpha2": "fractional order in y, 1 < alpha2 <= 2",
    "r1": "two-sidedness weight in x, in [0, 1]",
    "r2": "two-sidedness weight in y, in [0, 1]",
    "dt": "time step (days)",
    "nx": "grid intervals in x",
    "ny": "grid intervals in y",
    "domain": "xL, xH, yL, yH",
    "inner_iterations": "extra half-step reaction re-evaluations per step (default 0)",
    "mu": "host birth/death rate",
    "beta": "vector-to-host infection rate",
    "gamma": "host recovery rate",
    "theta": "host-to-vector infection rate",
    "nu": "vector birth/death rate",
    "diffusion": "diffusion coefficient for every compartment and direction",
    "a_s": "x diffusion of S",
    "b_s": "y diffusion of S",
    "a_i": "x diffusion of I",
    "b_i": "y diffusion of I",
    "a_v": "x diffusion of V",
    "b_v": "y diffusion of V",
    "t_end": "final time (days)",
    "snapshot_times": "comma-separated output times (days)",
    "output_dir": "directory for snapshots and manifest",
    "mode": "fractional or classical (classical forces alpha1 = alpha2 = 2)",
    "threshold": "front-radius threshold on the infected field",
}


class ScenarioError(ValueError):
    """Invalid or unreadable scenario configuration."""


@dataclass
class Scenario:
    scheme: SchemeConfig
    params: SivParams
    t_end: float
    snapshot_times: list[float] = field(default_factory=list)
    output_dir: Path | None = None
    mode: str = "fractional"
    threshold: float = DEFAULT_THRESHOLD
    defaults_used: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.mode not in ("fractional", "classical"):
            raise ScenarioError(f"mode must be 'fractional' or 'classical', got {self.mode!r}")
        if self.t_end < 0:
            raise ScenarioError("t_end must be non-negative")
        times = [float(t) for t in self.snapshot_times] or sorted({0.0, float(self.t_end)})
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ScenarioError("snapshot_times must be strictly increasing")
        if times[0] < 0 or times[-1] > self.t_end + 1e-12:
            raise ScenarioError(f"snapshot_times must lie in [0, {self.t_end}]")
        self.snapshot_times = times
        if self.mode == "classical":
            self.scheme = replace(self.scheme, alpha1=2.0, alpha2=2.0)
        if self.output_dir is not None:
            self.output_dir = Path(self.output_dir)

    def classical(self) -> "Scenario":
        return replace(self, mode="classical")


@dataclass
class SnapshotRecord:
    time: float
    compartment: str
    grid: np.ndarray
    metrics: dict
    step: int = 0


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    """Parse scenario text; unknown keys and bad values raise :class:`ScenarioError`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        cp.read_string("[scenario]\n" + text, source=source)
    except configparser.Error as exc:
        raise ScenarioError(f"{source}: {exc}") from exc
    kv = dict(cp["scenario"])
    unknown = sorted(set(kv) - set(SCENARIO_KEYS))
    if unknown:
        raise ScenarioError(f"{source}: unknown keys {', '.join(unknown)}")
    defaults_used = []

    def get(key, default, conv=float):
        if key in kv:
            try:
                return conv(kv[key])
            except ValueError as exc:
                raise ScenarioError(f"{source}: bad value for {key}: {kv[key]!r}") from exc
        defaults_used.append(key)
        return default

    try:
        alpha = get("alpha", 2.0)
        domain = get("domain", (0.0, 1.0, 0.0, 1.0), lambda s: tuple(_floats(s)))
        if len(domain) != 4:
            raise ScenarioError(f"{source}: domain needs 4 values")
        scheme = SchemeConfig(
            alpha1=get("alpha1", alpha),
            alpha2=get("alpha2", alpha),
            r1=get("r1", 0.5),
            r2=get("r2", 0.5),
            dt=get("dt", 0.25),
            nx=get("nx", 64, int),
            ny=get("ny", 64, int),
            domain=domain,
            inner_iterations=get("inner_iterations", 0, int),
        )
        diff = get("diffusion", DEFAULT_DIFFUSION)
        params = SivParams(
            **{k: get(k, v) for k, v in DEFAULT_PARAMS.items()},
            **{k: get(k, diff) for k in ("a_s", "b_s", "a_i", "b_i", "a_v", "b_v")},
        )
        t_end = get("t_end", 180.0)
        return Scenario(
            scheme=scheme,
            params=params,
            t_end=t_end,
            snapshot_times=get("snapshot_times", [], _floats),
            output_dir=get("output_dir", None, str),
            mode=get("mode", "fractional", str.strip),
            threshold=get("threshold", DEFAULT_THRESHOLD),
            defaults_used=defaults_used,
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"{source}: {exc}") from exc


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario(text, str(path))


def midpoint(grid: Grid) -> tuple[int, int]:
    return grid.nx // 2, grid.ny // 2


def midpoint_seed_state(cfg: SchemeConfig) -> SivState:
    """Single infected seed at the grid midpoint: ``I = 0.1, S = 0.9`` there,
    ``S = 1`` elsewhere in the interior, ``V = 0``, zero boundary."""
    grid = cfg.grid
    if grid.nx < 3 or grid.ny < 3:
        raise ValueError("initial conditions need at least 3 intervals per direction")
    state = SivState.uniform(grid, 1.0, 0.0, 0.0)
    i, j = midpoint(grid)
    state.S[i, j] = 0.9
    state.I[i, j] = 0.1
    return state


def total_mass(f: np.ndarray, grid: Grid) -> float:
    return float(f.sum() * grid.hx * grid.hy)


def front_radius(f: np.ndarray, grid: Grid, threshold: float = DEFAULT_THRESHOLD) -> float:
    """Largest distance from the grid midpoint to a cell with value ``>= threshold``."""
    X, Y = grid.mesh()
    i, j = midpoint(grid)
    mask = f >= threshold
    if not mask.any():
        return 0.0
    d = np.hypot(X - X[i, j], Y - Y[i, j])
    return float(d[mask].max())


def field_metrics(f: np.ndarray, grid: Grid, threshold: float = DEFAULT_THRESHOLD) -> dict:
    return {
        "total_mass": total_mass(f, grid),
        "max": float(f.max()),
        "front_radius": front_radius(f, grid, threshold),
    }


def snapshot_name(time: float, compartment: str) -> str:
    return f"{compartment}_t{time:010.4f}.txt"


def write_snapshot(path, f: np.ndarray, grid: Grid, time: float) -> None:
    """Header ``nx ny xL xH yL yH time`` (point counts), then one row per y index."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write(
            f"{grid.nx + 1} {grid.ny + 1} {grid.xl!r} {grid.xh!r} {grid.yl!r} {grid.yh!r} {time!r}\n"
        )
        np.savetxt(fh, f.T, fmt="%.17g")


def read_snapshot(path) -> tuple[np.ndarray, Grid, float]:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().split()
        if len(header) != 7:
            raise ValueError(f"{path}: malformed snapshot header")
        npx, npy = int(header[0]), int(header[1])
        xl, xh, yl, yh, t = map(float, header[2:])
        data = np.loadtxt(fh, ndmin=2)
    if data.shape != (npy, npx):
        raise ValueError(f"{path}: expected {npy} rows of {npx} values, got {data.shape}")
    return data.T.copy(), Grid(npx - 1, npy - 1, xl, xh, yl, yh), t


def run(
    scenario: Scenario,
    output_dir=None,
    threads: int = 1,
    method: str = "adi",
    initial_state: SivState | None = None,
) -> list[SnapshotRecord]:
    """Integrate ``scenario`` and return snapshot records.

    Snapshots land on the nearest time step.  When an output directory is
    given (argument or scenario), snapshot files and ``manifest.json`` are
    written there.  ``method`` selects ``"adi"`` or the dense ``"unsplit"``
    reference.  ``initial_state`` replaces the midpoint-seed initial
    conditions.
    """
    cfg, p = scenario.scheme, scenario.params
    out = Path(output_dir) if output_dir is not None else scenario.output_dir
    n_steps = int(math.ceil(scenario.t_end / cfg.dt - 1e-9))
    wanted = {}
    for t in scenario.snapshot_times:
        wanted.setdefault(min(n_steps, int(round(t / cfg.dt))), []).append(t)

    if initial_state is None:
        state = midpoint_seed_state(cfg)
    elif initial_state.grid != cfg.grid:
        raise ScenarioError("initial state grid does not match the scenario")
    else:
        state = initial_state.copy()
    if method == "adi":
        ws = AdiWorkspace(cfg, p, threads=threads)
        advance = lambda s: step(ws, cfg, p, s)
    elif method == "unsplit":
        advance = lambda s: unsplit_cn_step(p, cfg, s)
    else:
        raise ValueError(f"unknown method {method!r}")

    records = []

    def emit(n, s):
        for t in wanted.get(n, []):
            for c in COMPARTMENTS:
                f = s[c].copy()
                records.append(
                    SnapshotRecord(t, c, f, field_metrics(f, cfg.grid, scenario.threshold), n)
                )

    emit(0, state)
    for n in range(1, n_steps + 1):
        try:
            state = advance(state)
        except SolverError as exc:
            raise SolverError(f"step {n} (t={n * cfg.dt:g}): {exc}") from exc
        if not all(np.isfinite(f).all() for f in state.fields()):
            raise SolverError(f"step {n} (t={n * cfg.dt:g}): non-finite values")
        emit(n, state)
    if out is not None:
        write_run(out, scenario, records, method)
    return records


def write_run(out, scenario: Scenario, records: list[SnapshotRecord], method: str = "adi") -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = scenario.scheme
    entries = []
    for rec in records:
        name = snapshot_name(rec.time, rec.compartment)
        write_snapshot(out / name, rec.grid, cfg.grid, rec.step * cfg.dt)
        entries.append(
            {
                "time": rec.time,
                "step": rec.step,
                "step_time": rec.step * cfg.dt,
                "compartment": rec.compartment,
                "file": name,
                "metrics": rec.metrics,
            }
        )
    params = {
        k: (v if np.ndim(v) == 0 else "field") for k, v in asdict(scenario.params).items()
    }
    manifest = {
        "method": method,
        "mode": scenario.mode,
        "scheme": {**asdict(cfg), "domain": list(cfg.domain)},
        "params": params,
        "t_end": scenario.t_end,
        "snapshot_times": scenario.snapshot_times,
        "front_radius_threshold": scenario.threshold,
        "implementer_chosen_defaults": sorted(
            k for k in scenario.defaults_used if k in DEFAULT_PARAMS or k == "diffusion"
        ),
        "note": "rate and diffusion defaults are implementer-chosen demo values, not published ones",
        "snapshots": entries,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))


def load_run(path) -> tuple[dict, list[SnapshotRecord]]:
    """Read a run directory and recompute every metric from the snapshot grids."""
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    threshold = manifest.get("front_radius_threshold", DEFAULT_THRESHOLD)
    records = []
    for e in manifest["snapshots"]:
        f, grid, _ = read_snapshot(path / e["file"])
        metrics = field_metrics(f, grid, threshold)
        for k, v in metrics.items():
            if not math.isclose(v, e["metrics"][k], rel_tol=1e-12, abs_tol=1e-15):
                raise ValueError(f"{e['file']}: metric {k} does not match its grid")
        records.append(SnapshotRecord(e["time"], e["compartment"], f, metrics, e["step"]))
    return manifest, records
