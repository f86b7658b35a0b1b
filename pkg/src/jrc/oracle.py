"""Reference solvers for cross-checking the iterative quadratic solver.

None of these touch :mod:`jrc.solver`. They are slow and meant for
small instances in tests.
"""

import numpy as np
from scipy import linalg as sla
from scipy import optimize

from .matrixcore import as_matrix, objective_J, row_l2_norms

__all__ = [
    "ridge_closed_form",
    "largest_eigenvalue",
    "lasso_objective",
    "proximal_lasso",
    "smoothed_descent_reference",
]


def ridge_closed_form(A, Y, lam):
    """Minimiser of ``||AX - Y||_F^2 + lam ||X||_F^2``.

    Wide dictionaries (m < d) go through the m x m dual system
    ``A^T (A A^T + lam I)^{-1} Y``; tall ones through the d x d primal one.
    Both use a hand-rolled Cholesky back-substitution.
    """
    A, Y = as_matrix(A, "A"), as_matrix(Y, "Y")
    if lam <= 0:
        raise ValueError("lam must be positive")
    m, d = A.shape
    if m < d:
        K = A @ A.T + lam * np.eye(m)
        return A.T @ _cholesky_solve(K, Y)
    K = A.T @ A + lam * np.eye(d)
    return _cholesky_solve(K, A.T @ Y)


def _cholesky_solve(K, B):
    L = np.linalg.cholesky(K)
    Z = sla.solve_triangular(L, B, lower=True)
    return sla.solve_triangular(L.T, Z, lower=False)


def largest_eigenvalue(S, iterations=1000, tol=1e-12, seed=0):
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    S = np.asarray(S, dtype=np.float64)
    v = np.random.default_rng(seed).standard_normal(S.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iterations):
        w = S @ v
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        v = w / nrm
        new = float(v @ S @ v)
        if abs(new - est) <= tol * max(abs(new), 1.0):
            return new
        est = new
    return est


def lasso_objective(A, y, x, lam):
    r = A @ x - y
    return float(r @ r + lam * np.sum(np.abs(x)))


def proximal_lasso(A, y, lam, iterations=200000, tol=1e-10):
    """ISTA for ``min_x ||y - Ax||_2^2 + lam ||x||_1``.

    The step is ``1/L`` with ``L = 2 * lambda_max(A^T A)``, the Lipschitz
    constant of the gradient of the (unhalved) fidelity. Stops once the
    relative objective decrease of one step falls below ``tol``.

    Returns
    -------
    x : ndarray, shape (d,)
    history : list of float
        Objective value after every iteration, starting with ``x = 0``.
    """
    A = as_matrix(A, "A")
    y = np.asarray(y, dtype=np.float64).ravel()
    d = A.shape[1]
    x = np.zeros(d)
    if lam == 0:
        x = np.linalg.lstsq(A, y, rcond=None)[0]
        return x, [lasso_objective(A, y, x, 0.0)]
    L = 2.0 * largest_eigenvalue(A.T @ A)
    if L == 0:
        return x, [lasso_objective(A, y, x, lam)]
    step = 1.0 / L
    Aty = A.T @ y
    AtA = A.T @ A
    history = [lasso_objective(A, y, x, lam)]
    for _ in range(iterations):
        z = x - step * 2.0 * (AtA @ x - Aty)
        x = np.sign(z) * np.maximum(np.abs(z) - lam * step, 0.0)
        history.append(lasso_objective(A, y, x, lam))
        prev, cur = history[-2], history[-1]
        if prev - cur <= tol * max(abs(prev), 1e-300):
            break
    return x, history


def _smoothed_value_and_grad(x, A, Y, q, p, lam, s):
    d, n = A.shape[1], Y.shape[1]
    X = x.reshape(d, n)
    R = A @ X - Y
    r2 = np.sum(R * R, axis=1) + s * s
    x2 = np.sum(X * X, axis=1) + s * s
    val = np.sum(r2 ** (q / 2)) + lam * np.sum(x2 ** (p / 2))
    gR = (q * r2 ** (q / 2 - 1))[:, None] * R
    gX = A.T @ gR + lam * (p * x2 ** (p / 2 - 1))[:, None] * X
    return val, gX.ravel()


def _prune_rows(A, Y, X, q, p, lam):
    # zero out near-null rows whenever that lowers the true objective
    best = objective_J(A, Y, X, q, p, lam)
    order = np.argsort(row_l2_norms(X))
    for i in order:
        if not np.any(X[i]):
            continue
        trial = X.copy()
        trial[i] = 0.0
        val = objective_J(A, Y, trial, q, p, lam)
        if val <= best:
            X, best = trial, val
    return X, best


def smoothed_descent_reference(A, Y, q, p, lam, smoothing=1e-6, restarts=5, seed=0,
                               return_solution=False):
    """Best objective found by multi-start quasi-Newton descent.

    Row norms inside the objective are smoothed as
    ``sqrt(||row||^2 + smoothing^2)`` so the surrogate is differentiable;
    each restart is polished by L-BFGS and then scored on the exact
    (unsmoothed) objective. The first start is the zero matrix, the rest
    are Gaussian. Meant for m, d <= 10 and n <= 3.
    """
    A, Y = as_matrix(A, "A"), as_matrix(Y, "Y")
    d, n = A.shape[1], Y.shape[1]
    if not np.any(Y):
        X = np.zeros((d, n))
        return (0.0, X) if return_solution else 0.0
    rng = np.random.default_rng(seed)
    scale = np.linalg.norm(Y) / max(np.linalg.norm(A), 1e-300)
    best_val, best_X = np.inf, None
    for r in range(restarts):
        x0 = np.zeros(d * n) if r == 0 else scale * rng.standard_normal(d * n)
        for s in (1e-2, smoothing):
            res = optimize.minimize(
                _smoothed_value_and_grad, x0, args=(A, Y, q, p, lam, s), jac=True,
                method="L-BFGS-B", options={"maxiter": 20000, "ftol": 1e-15, "gtol": 1e-12},
            )
            x0 = res.x
        X, val = _prune_rows(A, Y, x0.reshape(d, n), q, p, lam)
        if val < best_val:
            best_val, best_X = val, X
    if return_solution:
        return best_val, best_X
    return best_val
