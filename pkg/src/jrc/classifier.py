"""Joint representation classification by per-class reconstruction residuals."""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .matrixcore import ShapeError, as_matrix
from .solver import ConvergenceTrace, SolverConfig, iqm_solve

__all__ = [
    "Dictionary",
    "ClassificationResult",
    "per_class_residuals",
    "classify",
    "robust_classify",
]


@dataclass(frozen=True)
class Dictionary:
    """Training matrix ``A = [A_1, ..., A_I]`` with contiguous class blocks.

    Attributes
    ----------
    data : ndarray, shape (m, d)
    class_sizes : tuple of int
        Column count of every block, summing to ``d``.
    labels : tuple
        One unique identifier per block.
    """

    data: np.ndarray
    class_sizes: tuple
    labels: tuple

    def __post_init__(self):
        data = as_matrix(self.data, "dictionary")
        sizes = tuple(int(s) for s in self.class_sizes)
        labels = tuple(self.labels)
        if any(s < 1 for s in sizes):
            raise ValueError("every class needs at least one column")
        if sum(sizes) != data.shape[1]:
            raise ShapeError(f"class sizes sum to {sum(sizes)} but dictionary has {data.shape[1]} columns")
        if len(labels) != len(sizes):
            raise ValueError("need exactly one label per class")
        if len(set(labels)) != len(labels):
            raise ValueError("class labels must be unique")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "class_sizes", sizes)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_columns(cls, data, column_labels):
        """Group columns by label (sorted order), keeping their relative order."""
        data = as_matrix(data, "dictionary")
        column_labels = list(column_labels)
        if len(column_labels) != data.shape[1]:
            raise ShapeError("need one label per column")
        labels = sorted(set(column_labels))
        order = [j for lab in labels for j, c in enumerate(column_labels) if c == lab]
        sizes = [column_labels.count(lab) for lab in labels]
        return cls(data[:, order], tuple(sizes), tuple(labels))

    @property
    def n_classes(self):
        return len(self.class_sizes)

    def slices(self):
        bounds = np.concatenate([[0], np.cumsum(self.class_sizes)])
        return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]

    def normalized(self):
        """Copy with every column scaled to unit Euclidean norm (zero columns kept)."""
        norms = np.linalg.norm(self.data, axis=0)
        norms[norms == 0] = 1.0
        return Dictionary(self.data / norms, self.class_sizes, self.labels)


@dataclass
class ClassificationResult:
    labels: list
    residuals: np.ndarray
    coding: np.ndarray
    trace: ConvergenceTrace
    class_index: np.ndarray = field(default=None, repr=False)

    @property
    def converged(self):
        return self.trace.converged

    def accuracy(self, true_labels):
        true_labels = list(true_labels)
        return float(np.mean([a == b for a, b in zip(self.labels, true_labels)]))


def per_class_residuals(dictionary, X, Y, products=None, E=None):
    """Residual matrix with entry ``(i, j) = ||(Y - E - A_i X_i)_j||_2``.

    Parameters
    ----------
    dictionary : Dictionary
    X : array_like, shape (d, n)
    Y : array_like, shape (m, n)
    products : list of ndarray, optional
        Precomputed ``A_i X_i`` blocks (the solver leaves them on its trace).
    E : array_like, shape (m, n), optional
        Recovered corruption, subtracted from ``Y`` first.

    Returns
    -------
    ndarray, shape (I, n)
    """
    X, Y = as_matrix(X, "X"), as_matrix(Y, "Y")
    A = dictionary.data
    if X.shape[0] != A.shape[1]:
        raise ShapeError(f"coding matrix has {X.shape[0]} rows but dictionary has {A.shape[1]} columns")
    if Y.shape != (A.shape[0], X.shape[1]):
        raise ShapeError(f"Y has shape {Y.shape}; expected ({A.shape[0]}, {X.shape[1]})")
    if products is None or len(products) != dictionary.n_classes:
        products = [A[:, sl] @ X[sl] for sl in dictionary.slices()]
    target = Y if E is None else Y - as_matrix(E, "E")
    return np.stack([np.linalg.norm(target - Bi, axis=0) for Bi in products])


def _decide(dictionary, residuals):
    idx = np.argmin(residuals, axis=0)  # first minimum wins ties
    return [dictionary.labels[i] for i in idx], idx


def _prepare(dictionary, normalize):
    if normalize:
        return dictionary.normalized()
    warnings.warn("dictionary columns are not normalised; residual scales follow raw column norms",
                  stacklevel=3)
    return dictionary


def classify(dictionary, Y, cfg=None, normalize=True, X0=None):
    """Code all queries jointly, then assign each to its least-residual class.

    Parameters
    ----------
    dictionary : Dictionary
    Y : array_like, shape (m, n)
        Queries stacked column-wise.
    cfg : SolverConfig, optional
    normalize : bool
        Scale dictionary columns to unit norm before coding.
    X0 : array_like, optional
        Starting coding matrix forwarded to the solver.

    Returns
    -------
    ClassificationResult
        Labels come from the lowest-objective iterate even when the solver
        stopped at ``max_outer``; check ``result.converged``.
    """
    cfg = cfg or SolverConfig()
    Y = as_matrix(Y, "Y")
    if Y.shape[0] != dictionary.data.shape[0]:
        raise ShapeError(f"queries have {Y.shape[0]} rows but dictionary has {dictionary.data.shape[0]}")
    D = _prepare(dictionary, normalize)
    X, trace = iqm_solve(D.data, Y, cfg, X0=X0, class_sizes=D.class_sizes)
    residuals = per_class_residuals(D, X, Y, products=trace.class_products)
    labels, idx = _decide(D, residuals)
    return ClassificationResult(labels=labels, residuals=residuals, coding=X, trace=trace,
                                class_index=idx)


def robust_classify(dictionary, Y, cfg=None, normalize=True, lam_error=None):
    """Classify with an explicit corruption term, ``Y = A X + E``.

    The augmented dictionary ``[A, I]`` is coded jointly; the rows of ``E``
    share the mixed-norm penalty with weight ``lam_error`` (default
    ``cfg.lam``). Residuals are measured against the cleaned queries
    ``Y - E``.

    Returns
    -------
    result : ClassificationResult
        ``result.coding`` holds only the ``X`` block.
    E : ndarray, shape (m, n)
    """
    cfg = cfg or SolverConfig()
    Y = as_matrix(Y, "Y")
    m = dictionary.data.shape[0]
    if Y.shape[0] != m:
        raise ShapeError(f"queries have {Y.shape[0]} rows but dictionary has {m}")
    D = _prepare(dictionary, normalize)
    d = D.data.shape[1]
    A_hat = np.hstack([D.data, np.eye(m)])
    weights = None
    if lam_error is not None:
        if not lam_error > 0:
            raise ValueError("lam_error must be positive")
        weights = np.concatenate([np.ones(d), np.full(m, lam_error / cfg.lam)])
    X_hat, trace = iqm_solve(A_hat, Y, cfg, class_sizes=D.class_sizes + (m,),
                             reg_weights=weights)
    X, E = X_hat[:d], X_hat[d:]
    residuals = per_class_residuals(D, X, Y, products=trace.class_products[:-1], E=E)
    labels, idx = _decide(D, residuals)
    result = ClassificationResult(labels=labels, residuals=residuals, coding=X, trace=trace,
                                  class_index=idx)
    return result, E
