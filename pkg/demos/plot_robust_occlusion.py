"""
Coding through corruption
=========================

Corrupt a handful of pixels in one query and let an explicit error term
absorb them.
"""

import numpy as np

from jrc import SolverConfig, classify, robust_classify
from jrc.dataset import assemble_dictionary, make_synthetic, split, vectorize

train, test = split(make_synthetic(seed=0), 0.8, seed=0)
D = assemble_dictionary(train)
Y = vectorize(test.images)

rng = np.random.default_rng(1)
rows = rng.choice(Y.shape[0], size=6, replace=False)
Yc = Y.copy()
Yc[rows, 0] += 10.0 * rng.choice([-1.0, 1.0], size=rows.size)

###############################################################################
# Plain coding has to explain the spikes with face atoms.
cfg = SolverConfig(q=2, p=1, lam=0.1)
plain = classify(D, Yc, cfg)
print("plain label :", plain.labels[0], "true:", test.labels[0])

###############################################################################
# With the identity block appended, the spikes move into E instead.
res, E = robust_classify(D, Yc, cfg)
share = np.sum(E[rows, 0] ** 2) / np.sum(E[:, 0] ** 2)
print("robust label:", res.labels[0])
print(f"energy of E on corrupted pixels: {100 * share:.1f}%")
print("largest |E| entries at rows", np.sort(np.argsort(-np.abs(E[:, 0]))[:rows.size]),
      "corrupted rows", np.sort(rows))
