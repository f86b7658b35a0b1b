"""
Accuracy over a (q, p) by lambda grid
=====================================

Sweep the regularisation weight for several norm pairs and compare with
two classical baselines.
"""

import time

from jrc import SolverConfig, classify
from jrc.baselines import crc_classify, src_classify
from jrc.dataset import assemble_dictionary, make_synthetic, split, vectorize

train, test = split(make_synthetic(n_classes=8, per_class=10, noise=0.08, seed=3), 0.8, seed=3)
D = assemble_dictionary(train)
Y = vectorize(test.images)
lambdas = [0.01, 0.1, 1, 10, 100]


def accuracy(labels):
    return 100 * sum(a == b for a, b in zip(labels, test.labels)) / len(test.labels)


print(f"{'method':<18}" + "".join(f"{lam:>9g}" for lam in lambdas) + "   cpu s")
for q, p in [(2, 2), (2, 1), (1.5, 1), (1.5, 0.5), (1, 1), (1, 0.5)]:
    t0 = time.process_time()
    accs = [accuracy(classify(D, Y, SolverConfig(q=q, p=p, lam=lam)).labels) for lam in lambdas]
    cpu = time.process_time() - t0
    print(f"{f'JRC q={q:g} p={p:g}':<18}" + "".join(f"{a:9.1f}" for a in accs) + f"{cpu:8.2f}")

###############################################################################
# The baselines code each query on its own.
for name, fn in [("SRC", src_classify), ("CRC-RLS", crc_classify)]:
    t0 = time.process_time()
    accs = [accuracy(fn(D, Y, lam)[0]) for lam in lambdas]
    cpu = time.process_time() - t0
    print(f"{name:<18}" + "".join(f"{a:9.1f}" for a in accs) + f"{cpu:8.2f}")
