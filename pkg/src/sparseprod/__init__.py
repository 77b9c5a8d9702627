"""Approximate matrix products from reweighted sparse sums of rank-one terms.

``A @ B = sum_i A_i B^i`` (columns of ``A`` times rows of ``B``).  Keeping a
subset ``J`` of the terms and reweighting them optimally gives an error
governed by the Schur complement of ``Q_J`` in the kernel
``Q = (A.T A) * (B B.T)``.
"""
from .approx import (ApproxResult, MethodSpec, approximate_product, bound_expected_random,
                     bound_greedy_worstcase, bound_majorization_check, bound_trace,
                     bound_x_residual, finish_product, jl_approximate, relative_error_db)
from .exceptions import (CardinalityError, DegenerateKernelError, DegenerateWeightsError,
                         EnumerationTooLargeError, MatrixFormatError, NotPSDError,
                         ShapeError, SingularSystemError, SparseProdError)
from .kernel import (KernelPartition, NearSingularWarning, ProductKernel, Subset,
                     build_kernel, crabtree_haynsworth_entry, frobenius_product_identity,
                     nystrom_approximation, partition, schur_complement, schur_error)
from .rescale import (WeightedApproximant, apply, n_over_k_weights, optimal_weights,
                      power_weights)
from .select import (MHConfig, SelectionContext, determinant_law, mh_chain, select_determinant_exact,
                     select_determinant_mh, select_greedy, select_power, select_uniform)

__version__ = "0.1.0"
