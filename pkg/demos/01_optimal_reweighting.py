"""
Reweighting a fixed set of rank-one terms
=========================================

Pick k of the n outer products A_i B^i and ask which weights make their sum
closest to AB.  The answer is a k x k linear solve against the product kernel
Q = (A^T A) * (B B^T), and the squared error that remains is the sum of the
entries of a Schur complement of Q.
"""
import warnings

import numpy as np

import sparseprod as sp

rng = np.random.default_rng(7)
a = rng.standard_normal((30, 10))
b = rng.standard_normal((10, 40))
ab = a @ b

# the kernel sums to the squared norm of the product
q = sp.build_kernel(a, b).q
print("sum(Q)      =", q.sum())
print("||AB||_F^2  =", np.sum(ab ** 2))

# one subset, three ways to weight it
j = sp.Subset.of([1, 4, 6, 8], n=10)
for rule in ("n_over_k", "power", "optimal"):
    res = sp.finish_product(a, b, j, rule)
    print(f"{rule:>9}: weights {np.round(res.weights, 3)}  error {res.rel_error_db:7.2f} dB")

# the optimal error equals the entry sum of the Schur complement
p = sp.partition(q, j)
err2 = np.sum((ab - sp.finish_product(a, b, j, "optimal").approximant) ** 2)
print("error^2 =", err2, " sum(S_C) =", sp.schur_complement(p).sum())

# rank-deficient factors: past rank(A) * rank(B) terms the product is exact
a2 = rng.standard_normal((12, 1)) @ rng.standard_normal((1, 10))
b2 = rng.standard_normal((10, 2)) @ rng.standard_normal((2, 15))
spec = sp.MethodSpec("greedy", "optimal", 3)
with warnings.catch_warnings():
    # Q_J is singular here, so the solve goes through the pseudo-inverse
    warnings.simplefilter("ignore", sp.NearSingularWarning)
    res = sp.approximate_product(a2, b2, spec)
print("rank 1 x rank 2, k=3: relative error",
      res.abs_error_frobenius / np.linalg.norm(a2 @ b2))
