import numpy as np
import pytest

from jrc.matrixcore import objective_J
from jrc.oracle import (
    largest_eigenvalue,
    proximal_lasso,
    ridge_closed_form,
    smoothed_descent_reference,
)


def test_ridge_identity():
    np.testing.assert_allclose(ridge_closed_form(np.eye(2), np.eye(2), 1.0), 0.5 * np.eye(2))


def test_ridge_small_lambda_inverts(rng):
    A = rng.standard_normal((4, 4)) + 4 * np.eye(4)
    Y = rng.standard_normal((4, 2))
    X = ridge_closed_form(A, Y, 1e-10)
    np.testing.assert_allclose(X, np.linalg.solve(A, Y), atol=1e-8)


@pytest.mark.parametrize("shape", [(6, 4), (4, 6)])
def test_ridge_normal_equations(rng, shape):
    A = rng.standard_normal(shape)
    Y = rng.standard_normal((shape[0], 2))
    lam = 0.3
    X = ridge_closed_form(A, Y, lam)
    resid = (A.T @ A + lam * np.eye(shape[1])) @ X - A.T @ Y
    assert np.linalg.norm(resid) <= 1e-10


def test_power_iteration(rng):
    B = rng.standard_normal((8, 5))
    S = B.T @ B
    assert largest_eigenvalue(S) == pytest.approx(np.linalg.eigvalsh(S)[-1], rel=1e-9)


def test_lasso_orthonormal_soft_threshold():
    x, _ = proximal_lasso(np.eye(2), [1.0, 0.0], 0.5)
    np.testing.assert_allclose(x, [0.75, 0.0], atol=1e-9)


def test_lasso_large_lambda_is_zero(rng):
    A = rng.standard_normal((10, 6))
    y = rng.standard_normal(10)
    lam = 2.1 * np.max(np.abs(A.T @ y))
    x, _ = proximal_lasso(A, y, lam)
    assert not np.any(x)


def test_lasso_zero_lambda_least_squares(rng):
    A = rng.standard_normal((10, 4))
    y = rng.standard_normal(10)
    x, _ = proximal_lasso(A, y, 0.0)
    np.testing.assert_allclose(x, np.linalg.lstsq(A, y, rcond=None)[0], atol=1e-10)


def test_lasso_history_monotone(rng):
    A = rng.standard_normal((15, 30))
    y = rng.standard_normal(15)
    _, hist = proximal_lasso(A, y, 0.8)
    assert np.all(np.diff(hist) <= 1e-12 * hist[0])


def test_smoothed_reference_ridge(rng):
    A = rng.standard_normal((6, 5))
    Y = rng.standard_normal((6, 2))
    X = ridge_closed_form(A, Y, 0.5)
    ref = smoothed_descent_reference(A, Y, 2, 2, 0.5)
    assert ref == pytest.approx(objective_J(A, Y, X, 2, 2, 0.5), rel=1e-6)


def test_smoothed_reference_zero_queries(rng):
    assert smoothed_descent_reference(rng.standard_normal((4, 3)), np.zeros((4, 2)), 1.5, 0.5, 1.0) == 0.0


def test_smoothed_reference_lasso(rng):
    A = rng.standard_normal((8, 10))
    y = rng.standard_normal(8)
    _, hist = proximal_lasso(A, y, 0.7)
    ref = smoothed_descent_reference(A, y[:, None], 2, 1, 0.7)
    assert ref == pytest.approx(hist[-1], rel=1e-4)
