"""Query-by-query representation classifiers used as benchmark baselines.

SRC codes every query separately with an l1 penalty, CRC-RLS with a ridge
penalty; both decide by the same least-residual rule as the joint
classifier.
"""

import numpy as np

from .classifier import per_class_residuals
from .matrixcore import as_matrix
from .oracle import proximal_lasso, ridge_closed_form


def _decide(D, X, Y):
    residuals = per_class_residuals(D, X, Y)
    idx = np.argmin(residuals, axis=0)
    return [D.labels[i] for i in idx], residuals


def src_classify(dictionary, Y, lam, normalize=True, iterations=20000):
    D = dictionary.normalized() if normalize else dictionary
    Y = as_matrix(Y, "Y")
    X = np.column_stack([proximal_lasso(D.data, y, lam, iterations=iterations, tol=1e-8)[0]
                         for y in Y.T])
    return _decide(D, X, Y)


def crc_classify(dictionary, Y, lam, normalize=True):
    D = dictionary.normalized() if normalize else dictionary
    Y = as_matrix(Y, "Y")
    X = np.column_stack([ridge_closed_form(D.data, y[:, None], lam)[:, 0] for y in Y.T])
    return _decide(D, X, Y)
