"""
Choosing which terms to keep
============================

Five ways to pick k indices: uniformly, by row/column power (with or without
the greedy shortcut), and from the law P(J) ~ det(Q_J), either exactly by
enumeration or with a Metropolis-Hastings chain.
"""
from collections import Counter
from itertools import combinations

import numpy as np

import sparseprod as sp
from sparseprod.select import select

rng = np.random.default_rng(3)
a = rng.standard_normal((20, 6)) * np.linspace(0.5, 2.0, 6)
b = rng.standard_normal((6, 20))
kern = sp.ProductKernel.from_factors(a, b)
print("diag(Q) =", np.round(kern.diag, 1))

ctx = sp.SelectionContext(kern, 2, rng)
for name in ("uniform", "power", "greedy", "determinant_exact", "determinant_mh"):
    print(f"{name:>18}: {select(name, ctx).indices}")

# compare the chain with the enumerated law
subs, probs = sp.determinant_law(kern, 2)
chain = sp.mh_chain(ctx, sp.MHConfig(burn_in=1000, thinning=2), 20000)
freq = Counter(s.indices for s in chain)
print("\nsubset   exact   chain")
for s, p in zip(subs.tolist(), probs):
    print(f"{str(tuple(s)):8} {p:.4f}  {freq[tuple(s)] / len(chain):.4f}")
tv = 0.5 * sum(abs(freq[tuple(s)] / len(chain) - p) for s, p in zip(subs.tolist(), probs))
print("total variation:", round(tv, 4))

# the error each subset leaves under optimal weights
q = kern.q
err = {c: sp.schur_error(sp.partition(q, c)) for c in combinations(range(6), 2)}
best = min(err, key=err.get)
print("\nbest pair", best, "greedy pair", sp.select_greedy(ctx).indices)
