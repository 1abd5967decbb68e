import logging

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from conftest import smooth_field
from fracsiv.adi import AdiWorkspace, SchemeConfig, step
from fracsiv.grunwald import FractionalOperator, apply_shifted, grunwald_weights
from fracsiv.oracle import (
    GridTooLargeError,
    InstabilityError,
    assemble_global,
    classical_mode_amplitude,
    explicit_reference,
    global_operator,
    stable_dt_bound,
    unsplit_cn_step,
)
from fracsiv.siv import SivParams, SivState, ode_rhs


def test_global_operator_matches_slice_sums(rng):
    cfg = SchemeConfig(1.3, 1.7, 0.2, 0.9, 0.1, 7, 5, domain=(0.0, 2.0, 0.0, 1.0))
    a = rng.uniform(0.1, 1, size=cfg.grid.shape)
    b = rng.uniform(0.1, 1, size=cfg.grid.shape)
    u = rng.normal(size=cfg.grid.shape)
    got = (global_operator(cfg, a, b) @ u.ravel()).reshape(cfg.nx - 1, cfg.ny - 1)
    w = grunwald_weights(1.7, 16)
    expected = np.zeros_like(got)
    for side, rx, ry in (("minus", 0.8, 0.1), ("plus", 0.2, 0.9)):
        opx = FractionalOperator(1.3, side, "x", cfg.grid.hx, a)
        opy = FractionalOperator(1.7, side, "y", cfg.grid.hy, b)
        wx = grunwald_weights(1.3, 16)
        for i in range(1, cfg.nx):
            for j in range(1, cfg.ny):
                ux = apply_shifted(opx, wx, u, j)[i - 1]
                uy = apply_shifted(opy, w, u, i)[j - 1]
                expected[i - 1, j - 1] += rx * ux + ry * uy
    np.testing.assert_allclose(got, expected, rtol=1e-12, atol=1e-12)


def test_size_guard():
    with pytest.raises(GridTooLargeError):
        global_operator(SchemeConfig(nx=66, ny=66), 1.0, 1.0)
    global_operator(SchemeConfig(nx=65, ny=65), 1.0, 1.0)


def test_unsplit_zero_state(params):
    cfg = SchemeConfig(1.5, 1.5, 0.5, 0.5, 0.1, 6, 6)
    p = SivParams(0, 0.3, 0.1, 0.3, 0.1).with_diffusion(0.2)
    new = unsplit_cn_step(p, cfg, SivState.zeros(cfg.grid))
    assert all(np.all(f == 0) for f in new.fields())


def test_global_matrix_layout():
    cfg = SchemeConfig(1.5, 1.5, 0.5, 0.5, 0.3, 5, 4)
    sys = assemble_global(cfg, 1.0, 2.0)
    assert sys.operator.shape == (12, 30)
    assert list(sys.interior[:4]) == [6, 7, 8, 11]
    np.testing.assert_array_equal(sys.matrix, np.eye(12) - 0.15 * sys.operator[:, sys.interior])


@pytest.mark.parametrize("scheme", ["adi", "cn"])
def test_eigenmode_amplification(scheme):
    cfg = SchemeConfig(2.0, 2.0, 0.5, 0.5, 2e-3, 16, 16)
    p = SivParams(0, 0, 0, 0, 0).with_diffusion(0.7, 0.3)
    X, Y = cfg.grid.mesh()
    mode = np.sin(np.pi * X) * np.sin(np.pi * Y)
    mode[0], mode[-1], mode[:, 0], mode[:, -1] = 0, 0, 0, 0
    state = SivState(cfg.grid, mode, mode, mode)
    ws = AdiWorkspace(cfg, p)
    for _ in range(5):
        state = step(ws, cfg, p, state) if scheme == "adi" else unsplit_cn_step(p, cfg, state)
    amp = classical_mode_amplitude(cfg, 0.7, 0.3, 5, scheme)
    np.testing.assert_allclose(state.I, amp * mode, rtol=0, atol=1e-13)


def test_mode_amplitude_schemes_agree_to_second_order():
    cfg = SchemeConfig(2.0, 2.0, 0.5, 0.5, 1e-3, 64, 64)
    adi = classical_mode_amplitude(cfg, 1.0, 1.0, 50, "adi")
    cn = classical_mode_amplitude(cfg, 1.0, 1.0, 50, "cn")
    exact = classical_mode_amplitude(cfg, 1.0, 1.0, 50, "exact")
    assert abs(adi - cn) < 1e-5
    assert abs(adi - exact) < 1e-3 * exact
    with pytest.raises(ValueError):
        classical_mode_amplitude(cfg, 1.0, 1.0, 1, "rk4")


def test_explicit_reference_zero_state(params):
    cfg = SchemeConfig(1.5, 1.5, 0.5, 0.5, 0.1, 6, 6)
    p = SivParams(0, 0.3, 0.1, 0.3, 0.1).with_diffusion(0.2)
    out = explicit_reference(p, cfg, SivState.zeros(cfg.grid), 0.1, 1e-3)
    assert all(np.all(f == 0) for f in out.fields())
    assert out.time == pytest.approx(0.1)


def test_adi_unsplit_and_explicit_converge_together():
    cfg = SchemeConfig(1.4, 1.8, 0.3, 0.6, 1e-3, 6, 6)
    p = SivParams(0.01, 0.3, 0.1, 0.3, 0.1).with_diffusion(0.05, 0.02)
    f = smooth_field(cfg.grid, np.random.default_rng(11))
    start = SivState(cfg.grid, 0.5 + 0.3 * f, 0.1 * np.abs(f), 0.05 * np.abs(f))
    for fld in start.fields():
        fld[0], fld[-1], fld[:, 0], fld[:, -1] = 0, 0, 0, 0
    ws = AdiWorkspace(cfg, p)
    a, b = start, start
    for _ in range(20):
        a, b = step(ws, cfg, p, a), unsplit_cn_step(p, cfg, b)
    ref = explicit_reference(p, cfg, start, 0.02, 1e-5)
    for x, y, z in zip(a.fields(), b.fields(), ref.fields()):
        assert np.max(np.abs(x - y)) < 1e-4
        assert np.max(np.abs(x - z)) < 1e-4


def test_unsplit_ode_limit():
    cfg = SchemeConfig(1.5, 1.5, 0.5, 0.5, 0.01, 4, 4)
    p = SivParams(0.01, 0.3, 0.1, 0.3, 0.1)
    y0 = (0.95, 0.05, 0.0)
    state = SivState.uniform(cfg.grid, *y0)
    for _ in range(100):
        state = unsplit_cn_step(p, cfg, state)
    sol = solve_ivp(ode_rhs, (0, 1.0), y0, args=(p,), method="DOP853", rtol=1e-13, atol=1e-15)
    for f, y in zip(state.fields(), sol.y[:, -1]):
        np.testing.assert_allclose(f[1:-1, 1:-1], y, rtol=0, atol=1e-6)


def test_instability_detected(caplog):
    cfg = SchemeConfig(2.0, 2.0, 0.5, 0.5, 0.1, 16, 16)
    p = SivParams(0, 0, 0, 0, 0).with_diffusion(1.0)
    X, Y = cfg.grid.mesh()
    f = np.sin(15 * np.pi * X) * np.sin(15 * np.pi * Y)
    start = SivState(cfg.grid, f, f, f)
    bound = stable_dt_bound(p, cfg)
    with caplog.at_level(logging.WARNING, logger="fracsiv.oracle"):
        with pytest.raises(InstabilityError, match="step"):
            explicit_reference(p, cfg, start, 0.5, 10 * bound)
    assert "stability" in caplog.text
