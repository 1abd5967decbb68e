import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsiv.grunwald import (
    FractionalOperator,
    apply_shifted,
    grunwald_weights,
    operator_matrix,
    stencil_matrix,
)


def binomial_weight(alpha, k):
    return float((-1) ** k * mpmath.binomial(mpmath.mpf(alpha), k))


def test_classical_weights():
    assert grunwald_weights(2.0, 4).coeffs.tolist() == [1.0, -2.0, 1.0, 0.0]


def test_first_two_weights():
    assert grunwald_weights(1.5, 2).coeffs.tolist() == [1.0, -1.5]


def test_weights_alpha_three_halves():
    # values from (-1)^k binom(1.5, k) evaluated with mpmath
    expected = [binomial_weight(1.5, k) for k in range(4)]
    assert expected == [1.0, -1.5, 0.375, 0.0625]
    np.testing.assert_allclose(grunwald_weights(1.5, 4).coeffs, expected, rtol=1e-15)


@pytest.mark.parametrize("alpha", [1.1, 1.2, 1.5, 1.8, 2.0])
def test_recurrence_matches_binomial(alpha):
    g = grunwald_weights(alpha, 65).coeffs
    for k in range(65):
        ref = binomial_weight(alpha, k)
        if ref == 0.0:
            assert g[k] == 0.0
        else:
            assert abs(g[k] - ref) <= 1e-12 * abs(ref)


@pytest.mark.parametrize("alpha", [1.05, 1.3, 1.7, 1.95])
def test_sign_pattern_and_partial_sums(alpha):
    g = grunwald_weights(alpha, 200).coeffs
    assert g[0] == 1.0 and g[1] == -alpha
    assert np.all(g[2:] > 0)
    partial = np.abs(np.cumsum(g))
    assert np.all(np.diff(partial[1:]) < 0)
    assert partial[-1] < 0.05


@pytest.mark.parametrize("alpha,count", [(1.0, 4), (2.5, 4), (0.5, 4), (1.5, 1)])
def test_weights_reject_bad_input(alpha, count):
    with pytest.raises(ValueError):
        grunwald_weights(alpha, count)


def test_operator_rejects_bad_fields():
    with pytest.raises(ValueError):
        FractionalOperator(1.5, "minus", "x", 0.0)
    with pytest.raises(ValueError):
        FractionalOperator(1.5, "left", "x", 0.1)
    with pytest.raises(ValueError):
        FractionalOperator(1.5, "minus", "x", 0.1, -1.0)
    op = FractionalOperator(1.5, "minus", "x", 0.1, np.ones((5, 5)))
    with pytest.raises(ValueError):
        apply_shifted(op, grunwald_weights(1.5, 8), np.zeros((6, 6)), 2)


def test_second_difference_limit():
    field = np.zeros((5, 3))
    field[:, 1] = [0, 0, 1, 0, 0]
    w = grunwald_weights(2.0, 6)
    for side in ("minus", "plus"):
        op = FractionalOperator(2.0, side, "x", 1.0, 1.0)
        np.testing.assert_array_equal(apply_shifted(op, w, field, 1), [1.0, -2.0, 1.0])


@pytest.mark.parametrize("alpha", [1.2, 1.5, 2.0])
def test_zero_field(alpha):
    op = FractionalOperator(alpha, "plus", "y", 0.3, 2.0)
    out = apply_shifted(op, grunwald_weights(alpha, 10), np.zeros((7, 7)), 3)
    assert np.all(out == 0.0)


@pytest.mark.parametrize("side", ["minus", "plus"])
def test_matrix_free_matches_assembled(side, rng):
    alpha, h = 1.5, 0.25
    w = grunwald_weights(alpha, 10)
    op = FractionalOperator(alpha, side, "x", h, 1.0)
    field = np.zeros((7, 3))
    field[1:-1, 1] = rng.normal(size=5)
    A, load = operator_matrix(op, w, 1, 6)
    np.testing.assert_allclose(A @ field[1:-1, 1], apply_shifted(op, w, field, 1), rtol=0, atol=1e-13)
    # with nonzero boundary values the load columns carry the rest
    field[[0, -1], 1] = rng.normal(size=2)
    np.testing.assert_allclose(
        A @ field[1:-1, 1] + load @ field[[0, -1], 1], apply_shifted(op, w, field, 1), atol=1e-13
    )


def test_classical_operator_matrix():
    w = grunwald_weights(2.0, 6)
    expected = [[-2, 1, 0], [1, -2, 1], [0, 1, -2]]
    for side in ("minus", "plus"):
        A, _ = operator_matrix(FractionalOperator(2.0, side, "y", 1.0, 1.0), w, 1, 4)
        np.testing.assert_array_equal(A, expected)


def test_hessenberg_toeplitz_structure():
    w = grunwald_weights(1.3, 12)
    Ap, _ = operator_matrix(FractionalOperator(1.3, "plus", "x", 0.1, 2.0), w, 1, 10)
    Am, _ = operator_matrix(FractionalOperator(1.3, "minus", "x", 0.1, 2.0), w, 1, 10)
    for A in (Ap, Am):
        for d in range(-8, 9):
            diag = np.diagonal(A, d)
            assert np.all(diag == diag[0])
    # plus side is lower Hessenberg, minus side upper Hessenberg
    assert np.all(np.triu(Ap, 2) == 0) and np.all(np.tril(Am, -2) == 0)
    np.testing.assert_array_equal(Ap, Am.T)
    np.testing.assert_allclose(Ap[0, 0], 2.0 / 0.1**1.3 * w[1])


def test_variable_coefficient_scales_rows(rng):
    w = grunwald_weights(1.6, 10)
    coeff = rng.uniform(0.5, 2.0, size=(9, 9))
    op = FractionalOperator(1.6, "minus", "y", 0.125, coeff)
    A, _ = operator_matrix(op, w, 4, 8)
    W = stencil_matrix(w, 8, "minus")[:, 1:-1]
    np.testing.assert_allclose(A, W * (coeff[4, 1:-1] / 0.125**1.6)[:, None], rtol=1e-15)


def test_mirror_symmetry(rng):
    w = grunwald_weights(1.4, 12)
    u = np.zeros((3, 11))
    u[1, 1:-1] = rng.normal(size=9)
    rev = u[:, ::-1].copy()
    plus = apply_shifted(FractionalOperator(1.4, "plus", "y", 0.2, 1.5), w, u, 1)
    minus_rev = apply_shifted(FractionalOperator(1.4, "minus", "y", 0.2, 1.5), w, rev, 1)
    np.testing.assert_allclose(plus, minus_rev[::-1], atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(
    alpha=st.floats(1.01, 2.0),
    lam=st.floats(-10, 10),
    side=st.sampled_from(["minus", "plus"]),
    axis=st.sampled_from(["x", "y"]),
    seed=st.integers(0, 2**32 - 1),
)
def test_linearity(alpha, lam, side, axis, seed):
    r = np.random.default_rng(seed)
    u, v = r.normal(size=(2, 9, 9))
    w = grunwald_weights(alpha, 11)
    op = FractionalOperator(alpha, side, axis, 0.125, r.uniform(0, 1, size=(9, 9)))
    lhs = apply_shifted(op, w, u + lam * v, 4)
    rhs = apply_shifted(op, w, u, 4) + lam * apply_shifted(op, w, v, 4)
    scale = max(1.0, np.abs(lhs).max())
    np.testing.assert_allclose(lhs, rhs, atol=1e-13 * scale)
