"""
Joint classification of synthetic faces
=======================================

Split a synthetic face-like collection, build the class-blocked
dictionary and label every test image by its smallest class residual.
"""

import numpy as np

from jrc import SolverConfig, classify
from jrc.dataset import assemble_dictionary, make_synthetic, split, vectorize

ds = make_synthetic(n_classes=5, per_class=10, shape=(12, 10), seed=0)
train, test = split(ds, train_fraction=0.8, seed=0)
D = assemble_dictionary(train)
Y = vectorize(test.images)
print("dictionary", D.data.shape, "class sizes", D.class_sizes)

###############################################################################
# All queries are coded together; each one is then assigned to the class
# whose block reconstructs it best.
for q, p in [(2, 2), (2, 1), (1.5, 0.5), (1, 1)]:
    res = classify(D, Y, SolverConfig(q=q, p=p, lam=0.1))
    print(f"q={q:<4g} p={p:<4g} accuracy={100 * res.accuracy(test.labels):5.1f}%  "
          f"outer iterations={res.trace.iterations}")

###############################################################################
# The residual matrix has one row per class; the margin between the best
# and second-best class shows how confident each decision is.
res = classify(D, Y, SolverConfig(q=2, p=1, lam=0.1))
ordered = np.sort(res.residuals, axis=0)
for j, (pred, true) in enumerate(zip(res.labels, test.labels)):
    print(f"query {j}: predicted {pred}, true {true}, margin {ordered[1, j] - ordered[0, j]:.3f}")
