"""End-to-end approximate multiplication, the Gaussian-sketch baseline, the dB
error metric and the theoretical error bounds.

The default pipeline (``greedy`` selection + ``optimal`` rescaling) runs as:

1. ``T_i = ||A_i||^2 ||B^i||^2``; ``J`` = indices of the ``k`` largest.
2. ``Q_J`` and ``r = Q[J, :] 1`` from the ``k x n`` block of the kernel.
3. ``w = Q_J^{-1} r``.
4. return ``A_J diag(w) B_J``.

The ``n x n`` kernel is never formed along this path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matcore
from .exceptions import CardinalityError, ShapeError
from .kernel import ProductKernel, Subset, _coerce_subset, partition, schur_complement
from .rescale import RESCALE_RULES, apply, reweight
from .select import SELECTORS, MHConfig, SelectionContext, select

#: how standard normals are drawn; recorded in bench manifests
GAUSSIAN_METHOD = "numpy.random.Generator.standard_normal (ziggurat)"


@dataclass(frozen=True)
class MethodSpec:
    selection: str = "greedy"
    rescale: str = "optimal"
    k: int = 1

    def __post_init__(self):
        if self.selection not in SELECTORS:
            raise ValueError(f"unknown selection {self.selection!r}")
        if self.rescale not in RESCALE_RULES:
            raise ValueError(f"unknown rescale rule {self.rescale!r}")
        if self.k < 1:
            raise CardinalityError("k must be >= 1")


@dataclass(frozen=True)
class ApproxResult:
    approximant: np.ndarray
    subset: Subset
    weights: np.ndarray
    abs_error_frobenius: float
    rel_error_db: float
    pinv_fallback: bool = False


def _check_pair(a, b):
    a = matcore.as_matrix(a, "a")
    b = matcore.as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions differ: a is {a.shape}, b is {b.shape}")
    return a, b


def db(ratio) -> float:
    """``20 log10(ratio)``, with ``-inf`` for a zero ratio."""
    return float("-inf") if ratio == 0 else 20.0 * float(np.log10(ratio))


def relative_error_db(a, b, approximant, exact=None) -> float:
    """``20 log10(||AB - approx||_F / (||A||_F ||B||_F))``; ``-inf`` at zero error."""
    a, b = _check_pair(a, b)
    exact = a @ b if exact is None else exact
    err = matcore.frobenius_norm(exact - approximant)
    return db(err / (matcore.frobenius_norm(a) * matcore.frobenius_norm(b)))


def _result(a, b, approximant, subset, weights, exact, pinv_fallback=False):
    if not np.all(np.isfinite(approximant)):
        raise FloatingPointError("approximant has non-finite entries")
    err = matcore.frobenius_norm(exact - approximant)
    scale = matcore.frobenius_norm(a) * matcore.frobenius_norm(b)
    return ApproxResult(approximant, subset, np.asarray(weights, dtype=float), err,
                        db(err / scale) if scale > 0 else float("-inf"), pinv_fallback)


def approximate_product(a, b, spec: MethodSpec, rng=None, *, kernel=None, exact=None,
                        mh_config: MHConfig | None = None) -> ApproxResult:
    """Select, reweight and apply according to ``spec``.

    ``kernel`` may be passed to share one (lazy) :class:`ProductKernel`
    across calls on the same pair; ``exact`` likewise caches ``a @ b``.
    """
    a, b = _check_pair(a, b)
    n = a.shape[1]
    if spec.k > n:
        raise CardinalityError(f"k={spec.k} exceeds n={n}")
    kernel = ProductKernel.from_factors(a, b) if kernel is None else kernel
    rng = np.random.default_rng(rng)
    ctx = SelectionContext(kernel, spec.k, rng)
    subset = select(spec.selection, ctx, mh_config)
    return finish_product(a, b, subset, spec.rescale, kernel, exact)


def finish_product(a, b, subset, rule, kernel=None, exact=None) -> ApproxResult:
    """Reweight a chosen subset with ``rule`` and evaluate the error."""
    a, b = _check_pair(a, b)
    kernel = ProductKernel.from_factors(a, b) if kernel is None else kernel
    exact = a @ b if exact is None else exact
    wa = reweight(rule, a, b, kernel, subset)
    return _result(a, b, apply(a, b, wa), wa.subset, wa.weights, exact, wa.pinv_fallback)


def gaussian_sketch(k, n, rng) -> np.ndarray:
    """``k x n`` matrix of independent standard normal entries."""
    return np.random.default_rng(rng).standard_normal((k, n))


def jl_approximate(a, b, k, rng=None, exact=None) -> ApproxResult:
    """Non-adaptive baseline ``k^{-1} A W.T W B`` with a Gaussian sketch ``W``."""
    a, b = _check_pair(a, b)
    if k < 1:
        raise CardinalityError("k must be >= 1")
    n = a.shape[1]
    w = gaussian_sketch(k, n, rng)
    approx = (a @ w.T) @ (w @ b) / k
    exact = a @ b if exact is None else exact
    return _result(a, b, approx, Subset((), "explicit", n), np.empty(0), exact)


# ---------------------------------------------------------------- bounds

def bound_trace(p) -> float:
    """``(n - k) tr(S_C(Q_J))``: upper bound on the squared optimal error."""
    if p.z.size == 0:
        return 0.0
    return float((p.n - p.k) * np.trace(schur_complement(p)))


def _tail_energy(q, k):
    """``||X - X_k||_F^2`` for ``X.T X = Q``, i.e. the eigenvalue tail of ``Q``."""
    x = matcore.cholesky_factor(q)
    sig = matcore.svd_values(x)
    return float(np.sum(sig[k:] ** 2))


def bound_expected_random(kernel, k) -> float:
    """``sqrt((n - k)(k + 1)) ||X - X_k||_F`` with ``X.T X = Q``.

    Bounds the expected (unsquared) error of optimal reweighting on a subset
    drawn with probability proportional to ``det(Q_J)``.
    """
    q = kernel.q if isinstance(kernel, ProductKernel) else matcore.as_matrix(kernel)
    n = q.shape[0]
    if not 0 <= k <= n:
        raise CardinalityError(f"k={k} must lie in [0, {n}]")
    return float(np.sqrt((n - k) * (k + 1)) * np.sqrt(_tail_energy(q, k)))


@dataclass(frozen=True)
class MajorizationReport:
    """Prefix sums ``sum_{i<=m} sigma_i^2(X)`` vs ``sum_{i<=m} sigma_i^2(A) sigma_i^2(B)``."""
    lhs: np.ndarray
    rhs: np.ndarray
    margins: np.ndarray
    holds: bool


def _padded_sq_singular(m, n):
    s = matcore.svd_values(m) ** 2
    out = np.zeros(n)
    out[:min(n, s.size)] = s[:n]
    return out


def bound_majorization_check(a, b, rtol=1e-9) -> MajorizationReport:
    a, b = _check_pair(a, b)
    n = a.shape[1]
    q = ProductKernel.from_factors(a, b).q
    lam = np.clip(matcore.sym_eigen(q).eigenvalues, 0.0, None)
    lhs = np.cumsum(lam)
    rhs = np.cumsum(_padded_sq_singular(a, n) * _padded_sq_singular(b, n))
    margins = rhs - lhs
    scale = max(rhs[-1] if n else 0.0, matcore.ABS_FLOOR)
    return MajorizationReport(lhs, rhs, margins, bool(np.all(margins >= -rtol * scale)))


def bound_greedy_worstcase(a, b, j) -> float:
    """``sqrt((n - k) sum_{i not in J} ||A_i||^2 ||B^i||^2)``."""
    a, b = _check_pair(a, b)
    n = a.shape[1]
    j = _coerce_subset(j, n)
    rest = j.complement(n)
    power = np.sum(a[:, rest] ** 2, axis=0) * np.sum(b[rest, :] ** 2, axis=1)
    return float(np.sqrt((n - j.k) * power.sum()))


@dataclass(frozen=True)
class XResidualReport:
    """``lhs = ||X - X_k||^2`` and ``rhs = min(s1(A)^2 ||B||^2, s1(B)^2 ||A||^2) - ||X_k||^2``."""
    lhs: float
    rhs: float
    holds: bool


def bound_x_residual(a, b, k, rtol=1e-9) -> XResidualReport:
    a, b = _check_pair(a, b)
    q = ProductKernel.from_factors(a, b).q
    lam = np.clip(matcore.sym_eigen(q).eigenvalues, 0.0, None)
    lhs = float(lam[k:].sum())
    head = float(lam[:k].sum())
    sa, sb = matcore.svd_values(a), matcore.svd_values(b)
    na, nb = matcore.frobenius_norm(a), matcore.frobenius_norm(b)
    cap = min(sa[0] ** 2 * nb ** 2, sb[0] ** 2 * na ** 2)
    rhs = cap - head
    return XResidualReport(lhs, rhs, lhs <= rhs + rtol * max(cap, matcore.ABS_FLOOR))
