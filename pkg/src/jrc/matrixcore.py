"""Dense-matrix helpers, mixed l_{2,p} norms and the row reweighting diagonals.

Row norms, the mixed norm power ``sum_i ||M^i||_2^p`` and the diagonal
weights that turn the mixed-norm objective into a weighted quadratic all
live here. Everything is a pure function of its inputs.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ShapeError",
    "NumericalBreakdown",
    "NormExponents",
    "as_matrix",
    "row_l2_norms",
    "mixed_norm_pow",
    "row_weights",
    "weight_H",
    "weight_G",
    "objective_J",
]


class ShapeError(ValueError):
    """Raised when matrix dimensions are not conformable."""


class NumericalBreakdown(FloatingPointError):
    """Raised when a computation produces non-finite values."""


@dataclass(frozen=True)
class NormExponents:
    """Exponent pair ``(q, p)`` of the fidelity and regularisation terms.

    ``q`` must lie in [1, 2] and ``p`` in (0, 2].
    """

    q: float = 2.0
    p: float = 1.0

    def __post_init__(self):
        q, p = float(self.q), float(self.p)
        if not (1.0 <= q <= 2.0):
            raise ValueError(f"q must lie in [1, 2], got {self.q}")
        if not (0.0 < p <= 2.0):
            raise ValueError(f"p must lie in (0, 2], got {self.p}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)


def as_matrix(M, name="matrix"):
    """Return ``M`` as a finite 2-D float64 array.

    1-D input is promoted to a single column.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {M.shape}")
    if M.shape[0] < 1 or M.shape[1] < 1:
        raise ShapeError(f"{name} must have at least one row and column, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NumericalBreakdown(f"{name} contains NaN or Inf entries")
    return M


def row_l2_norms(M):
    """Euclidean norm of every row of ``M``.

    Each row is scaled by its largest absolute entry before squaring, so
    entries near the overflow threshold still give finite norms.

    Examples
    --------
    >>> row_l2_norms([[3.0, 4.0]])
    array([5.])
    """
    M = as_matrix(M)
    scale = np.max(np.abs(M), axis=1)
    safe = np.where(scale > 0, scale, 1.0)
    scaled = M / safe[:, None]
    return scale * np.sqrt(np.sum(scaled * scaled, axis=1))


def mixed_norm_pow(M, p):
    """``||M||_{2,p}^p = sum_i ||M^i||_2^p`` with ``0^p := 0``."""
    norms = row_l2_norms(M)
    if p == 2:
        return float(np.sum(norms * norms))
    out = np.zeros_like(norms)
    nz = norms > 0
    out[nz] = norms[nz] ** p
    return float(np.sum(out))


def row_weights(M, exponent, delta):
    """Diagonal ``1 / max(||M^i||_2, delta)^(2 - exponent)``; ones when exponent is 2."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    M = as_matrix(M)
    if exponent == 2:
        return np.ones(M.shape[0])
    norms = np.maximum(row_l2_norms(M), delta)
    return norms ** (exponent - 2.0)


def weight_H(X, p, delta=1e-8):
    """Regularisation weights, one per row of the coding matrix ``X``."""
    return row_weights(X, p, delta)


def weight_G(R, q, delta=1e-8):
    """Fidelity weights, one per row of the residual ``R = AX - Y``."""
    return row_weights(R, q, delta)


def objective_J(A, Y, X, q, p, lam, reg_weights=None):
    """Evaluate ``||AX - Y||_{2,q}^q + lam * ||X||_{2,p}^p``.

    Parameters
    ----------
    A, Y, X : array_like
        Dictionary (m x d), queries (m x n) and coding matrix (d x n).
    q, p : float
        Fidelity and regularisation exponents.
    lam : float
        Regularisation weight.
    reg_weights : array_like, optional
        Per-row multipliers of the regularisation term (length d). The
        default weights every row by one.
    """
    A, Y, X = as_matrix(A, "A"), as_matrix(Y, "Y"), as_matrix(X, "X")
    _check_conformable(A, Y, X)
    fidelity = mixed_norm_pow(A @ X - Y, q)
    if reg_weights is None:
        return fidelity + lam * mixed_norm_pow(X, p)
    norms = row_l2_norms(X)
    return fidelity + lam * float(np.sum(np.asarray(reg_weights) * _pow0(norms, p)))


def _pow0(values, p):
    out = np.zeros_like(values)
    nz = values > 0
    out[nz] = values[nz] ** p
    return out


def _check_conformable(A, Y, X):
    m, d = A.shape
    if Y.shape[0] != m:
        raise ShapeError(f"A has {m} rows but Y has {Y.shape[0]}; expected Y of shape ({m}, n)")
    if X.shape != (d, Y.shape[1]):
        raise ShapeError(f"X has shape {X.shape}; expected ({d}, {Y.shape[1]})")
