"""Reweighting rules for a selected subset ``J``.

``optimal`` solves ``Q_J w = r`` with ``r = [Q_J Y] 1`` (the row sums of the
``k x n`` block ``Q[J, :]``), which minimizes ``||AB - sum_J w_i A_i B^i||_F``.
Only that ``k x n`` block is ever formed.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import matcore
from .exceptions import DegenerateWeightsError, ShapeError
from .kernel import NearSingularWarning, ProductKernel, Subset, _coerce_subset, solve_block

RESCALE_RULES = ("optimal", "power", "n_over_k")


@dataclass(frozen=True)
class WeightedApproximant:
    """Subset, aligned weights, and the rule that produced them.

    ``pinv_fallback`` is set when ``Q_J`` was numerically singular and the
    optimal weights came from a pseudo-inverse.
    """
    subset: Subset
    weights: np.ndarray
    rescale_rule: str
    pinv_fallback: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.shape != (self.subset.k,):
            raise ShapeError(f"{w.shape[0]} weights for a subset of size {self.subset.k}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if self.rescale_rule not in RESCALE_RULES:
            raise ValueError(f"unknown rescale rule {self.rescale_rule!r}")


def optimal_weights(kernel: ProductKernel, j) -> WeightedApproximant:
    j = _coerce_subset(j, kernel.n)
    idx = j.array()
    block = kernel.rows(idx)
    r = block.sum(axis=1)
    q_j = matcore.symmetrize(block[:, idx])
    w, used_pinv = solve_block(q_j, r, allow_pinv=True)
    if used_pinv:
        warnings.warn("Q_J is numerically singular; optimal weights via pseudo-inverse",
                      NearSingularWarning, stacklevel=2)
    return WeightedApproximant(j, w, "optimal", used_pinv)


def power_weights(a, b, j) -> WeightedApproximant:
    """``w_i = 1 / sqrt(|J| ||A_i||^2 ||B^i||^2)``."""
    a = matcore.as_matrix(a, "a")
    b = matcore.as_matrix(b, "b")
    j = _coerce_subset(j, a.shape[1])
    idx = j.array()
    power = np.sum(a[:, idx] ** 2, axis=0) * np.sum(b[idx, :] ** 2, axis=1)
    if np.any(power <= 0):
        bad = idx[power <= 0].tolist()
        raise DegenerateWeightsError(f"selected indices {bad} have zero column/row norm")
    return WeightedApproximant(j, 1.0 / np.sqrt(j.k * power), "power")


def n_over_k_weights(n: int, j) -> WeightedApproximant:
    j = _coerce_subset(j, n)
    return WeightedApproximant(j, np.full(j.k, n / j.k), "n_over_k")


def apply(a, b, approx: WeightedApproximant) -> np.ndarray:
    """``A_J diag(w) B_J``, the reweighted sparse product."""
    a = matcore.as_matrix(a, "a")
    b = matcore.as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    j = _coerce_subset(approx.subset, a.shape[1])
    idx = j.array()
    return (a[:, idx] * approx.weights) @ b[idx, :]


def reweight(rule, a, b, kernel, j) -> WeightedApproximant:
    """Dispatch on a rescale tag."""
    if rule == "optimal":
        return optimal_weights(kernel, j)
    if rule == "power":
        return power_weights(a, b, j)
    if rule == "n_over_k":
        return n_over_k_weights(kernel.n, j)
    raise ValueError(f"unknown rescale rule {rule!r}")
