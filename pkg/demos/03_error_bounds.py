"""
Bounding the error
==================

The error left by the optimal weights is controlled by the Schur complement
S_C of Q_J in Q.  This script evaluates the bounds built on it for one
instance, and checks the expected-trace bound for det-proportional sampling
by enumerating every subset.
"""
import numpy as np

import sparseprod as sp
from sparseprod.approx import (bound_expected_random, bound_greedy_worstcase,
                               bound_majorization_check, bound_trace, bound_x_residual)

rng = np.random.default_rng(11)
a = rng.standard_normal((15, 8))
b = rng.standard_normal((8, 25))
kern = sp.ProductKernel.from_factors(a, b)
q = kern.q

print("eigenvalues of Q majorized by products of squared singular values:",
      bound_majorization_check(a, b).holds)

for k in (1, 2, 3, 5):
    j = sp.select_greedy(sp.SelectionContext(kern, k, rng))
    p = sp.partition(q, j)
    err2 = sp.schur_error(p)
    print(f"k={k}: error^2 {err2:10.2f} <= (n-k) tr S_C {bound_trace(p):10.2f}")
    print(f"      error {np.sqrt(err2):8.2f} <= greedy worst case "
          f"{bound_greedy_worstcase(a, b, j):8.2f}   X residual bound holds: "
          f"{bound_x_residual(a, b, k).holds}")

# expected trace under P(J) ~ det(Q_J) against (k+1) times the eigenvalue tail
lam = np.linalg.eigvalsh(q)[::-1]
for k in (1, 2, 3):
    subs, probs = sp.determinant_law(q, k)
    traces = [np.trace(sp.schur_complement(sp.partition(q, s))) for s in subs]
    print(f"k={k}: E tr S_C = {np.dot(probs, traces):9.2f}  <=  {(k + 1) * lam[k:].sum():9.2f}")
    print(f"      random-subset error bound {bound_expected_random(kern, k):9.2f}")
