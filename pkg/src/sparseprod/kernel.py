"""Product kernel ``Q = (A.T A) * (B B.T)``, its partitions and Schur complements.

Entry ``Q[i, j] = <A_i, A_j> <B^i, B^j>`` where ``A_i`` is the i-th column of
``A`` and ``B^i`` the i-th row of ``B``.  The squared Frobenius error of any
reweighted sparse sum ``sum_{i in J} w_i A_i B^i`` is a quadratic form in
``Q``, and under the optimal weights it equals the entry sum of the Schur
complement of ``Q_J`` in ``Q``.

All indices are 0-based.  A :class:`KernelPartition` lives in the "J-first"
frame: rows/columns of ``Q`` are reordered by ``perm`` so that the selected
indices come first (in increasing order), followed by the complement (also
increasing).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.linalg as sla

from . import matcore
from .exceptions import ShapeError, SingularSystemError

PROVENANCES = frozenset(
    {"uniform", "power", "determinant_exact", "determinant_mh", "greedy", "explicit"})


class NearSingularWarning(RuntimeWarning):
    """Q_J was numerically singular; a pseudo-inverse was used."""


@dataclass(frozen=True)
class Subset:
    """Strictly increasing index set ``J`` with a provenance tag."""
    indices: tuple
    provenance: str = "explicit"
    n: int | None = None

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"subset indices must be strictly increasing: {idx}")
        if idx and idx[0] < 0:
            raise IndexError(f"negative index {idx[0]}")
        if self.n is not None and idx and idx[-1] >= self.n:
            raise IndexError(f"index {idx[-1]} out of range for n={self.n}")

    @classmethod
    def of(cls, indices, n=None, provenance="explicit"):
        """Build from any iterable of distinct indices (sorted here)."""
        idx = sorted(int(i) for i in indices)
        if len(set(idx)) != len(idx):
            raise ValueError("subset indices must be distinct")
        return cls(tuple(idx), provenance, n)

    @property
    def k(self) -> int:
        return len(self.indices)

    def array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)

    def complement(self, n=None) -> np.ndarray:
        n = self.n if n is None else n
        if n is None:
            raise ValueError("complement needs the ground-set size n")
        mask = np.ones(n, dtype=bool)
        mask[list(self.indices)] = False
        return np.flatnonzero(mask)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


class ProductKernel:
    """The SPSD kernel ``Q`` of a factor pair, or wrapped around a given ``Q``.

    Built from factors, the kernel is lazy: ``diag`` is computed from column
    and row norms up front, individual row blocks ``Q[J, :]`` on demand via
    :meth:`rows`, and the full ``n x n`` matrix only when :attr:`q` is read.
    ``largest_block`` records the biggest block handed out so far, which lets
    tests assert that a pipeline never materialized the whole kernel.
    """

    def __init__(self, q=None, *, a=None, b=None):
        self._a = self._b = None
        self._q = None
        self.largest_block = (0, 0)
        if q is not None:
            q = matcore.as_matrix(q, "q")
            if q.shape[0] != q.shape[1]:
                raise ShapeError(f"kernel matrix must be square, got {q.shape}")
            scale = max(np.max(np.abs(q), initial=0.0), matcore.ABS_FLOOR)
            if np.max(np.abs(q - q.T), initial=0.0) > 1e-10 * scale:
                raise ValueError("kernel matrix is not symmetric")
            self._q = matcore.symmetrize(q)
            self.diag = np.diag(self._q).copy()
            self.n = q.shape[0]
        else:
            a = matcore.as_matrix(a, "a")
            b = matcore.as_matrix(b, "b")
            if a.shape[1] != b.shape[0]:
                raise ShapeError(f"inner dimensions differ: a is {a.shape}, b is {b.shape}")
            self._a, self._b = a, b
            self.n = a.shape[1]
            self.diag = np.sum(a * a, axis=0) * np.sum(b * b, axis=1)

    @classmethod
    def from_factors(cls, a, b):
        return cls(a=a, b=b)

    @classmethod
    def from_matrix(cls, q):
        return cls(q)

    @property
    def materialized(self) -> bool:
        return self._q is not None

    def _note(self, shape):
        if shape[0] * shape[1] > self.largest_block[0] * self.largest_block[1]:
            self.largest_block = tuple(shape)

    @property
    def q(self) -> np.ndarray:
        if self._q is None:
            q = matcore.gram(self._a) * matcore.gram(self._b.T)
            np.fill_diagonal(q, self.diag)
            self._q = q
        self._note(self._q.shape)
        return self._q

    def rows(self, idx) -> np.ndarray:
        """Return the ``len(idx) x n`` block ``Q[idx, :]``."""
        idx = np.asarray(list(idx), dtype=np.intp)
        if self._q is not None:
            block = self._q[idx, :]
        else:
            a, b = self._a, self._b
            block = (a[:, idx].T @ a) * (b[idx, :] @ b.T)
            block[np.arange(idx.size), idx] = self.diag[idx]
        self._note(block.shape)
        return block

    def principal(self, idx) -> np.ndarray:
        """Return the principal submatrix ``Q_J``."""
        idx = np.asarray(list(idx), dtype=np.intp)
        if self._q is not None:
            return self._q[np.ix_(idx, idx)]
        a, b = self._a, self._b
        aj, bj = a[:, idx], b[idx, :]
        sub = matcore.symmetrize((aj.T @ aj) * (bj @ bj.T))
        sub[np.diag_indices(idx.size)] = self.diag[idx]
        self._note(sub.shape)
        return sub


def as_kernel(x) -> ProductKernel:
    return x if isinstance(x, ProductKernel) else ProductKernel.from_matrix(x)


@dataclass(frozen=True)
class KernelPartition:
    """Blocks of ``Q`` in the J-first frame: ``[[q_j, y], [y.T, z]]``."""
    subset: Subset
    q_j: np.ndarray
    y: np.ndarray
    z: np.ndarray
    perm: np.ndarray = field(repr=False)

    @property
    def k(self):
        return self.q_j.shape[0]

    @property
    def n(self):
        return self.perm.size

    def assemble(self) -> np.ndarray:
        """Reassemble ``Q`` in the J-first frame."""
        return np.block([[self.q_j, self.y], [self.y.T, self.z]])

    def to_original(self, m) -> np.ndarray:
        """Map an ``n x n`` matrix from the J-first frame back to original order."""
        inv = np.argsort(self.perm)
        return m[np.ix_(inv, inv)]


def build_kernel(a, b) -> ProductKernel:
    """Materialized product kernel of ``a`` (m x n) and ``b`` (n x p)."""
    kern = ProductKernel.from_factors(a, b)
    kern.q
    return kern


def _coerce_subset(j, n) -> Subset:
    if not isinstance(j, Subset):
        j = Subset.of(j, n=n)
    if j.indices and (j.indices[-1] >= n or j.indices[0] < 0):
        raise IndexError(f"subset {j.indices} out of range for n={n}")
    return j


def partition(kernel, j) -> KernelPartition:
    kernel = as_kernel(kernel)
    n = kernel.n
    j = _coerce_subset(j, n)
    sel = j.array()
    rest = j.complement(n)
    perm = np.concatenate([sel, rest]).astype(np.intp)
    q = kernel.q
    return KernelPartition(
        subset=j,
        q_j=q[np.ix_(sel, sel)].copy(),
        y=q[np.ix_(sel, rest)].copy(),
        z=q[np.ix_(rest, rest)].copy(),
        perm=perm,
    )


def solve_block(q_j, rhs, allow_pinv=True):
    """Return ``(Q_J^{-1} rhs, used_pinv)``.

    Below the relative eigenvalue threshold ``1e-10 * lambda_max(Q_J)`` the
    Moore-Penrose inverse (eigenvalue clipping) is used when ``allow_pinv``,
    otherwise :class:`SingularSystemError` is raised.
    """
    k = q_j.shape[0]
    if k == 0:
        return np.zeros((0,) + np.shape(rhs)[1:]), False
    lam = np.linalg.eigvalsh(matcore.symmetrize(q_j))
    if lam[0] > matcore.SINGULAR_RTOL * lam[-1] and lam[-1] > 0:
        return sla.cho_solve(sla.cho_factor(q_j, lower=True), rhs), False
    if not allow_pinv:
        raise SingularSystemError(f"Q_J is singular (smallest eigenvalue {lam[0]:.3e})",
                                  pivot=float(lam[0]))
    pinv, _ = matcore.pinv_psd(q_j)
    return pinv @ rhs, True


def _schur(p: KernelPartition, allow_pinv=True):
    if p.k == 0:
        return p.z.copy(), False
    x, used_pinv = solve_block(p.q_j, p.y, allow_pinv)
    s = p.z - p.y.T @ x
    return matcore.symmetrize(s), used_pinv


def schur_complement(p: KernelPartition, allow_pinv=True) -> np.ndarray:
    """``S_C(Q_J) = Z - Y.T Q_J^{-1} Y`` in the J-first frame.

    Emits :class:`NearSingularWarning` when the pseudo-inverse path is taken.
    """
    s, used_pinv = _schur(p, allow_pinv)
    if used_pinv:
        warnings.warn("Q_J is numerically singular; using pseudo-inverse",
                      NearSingularWarning, stacklevel=2)
    return s


def schur_error(p: KernelPartition, allow_pinv=True) -> float:
    """``tr(S_C(Q_J) E)``, the entry sum of the Schur complement (0 when k == n)."""
    if p.z.size == 0:
        return 0.0
    return float(schur_complement(p, allow_pinv).sum())


def crabtree_haynsworth_entry(kernel, j, row, col) -> float:
    """Entry ``(row, col)`` of ``S_C(Q_J)`` as a ratio of bordered minors.

    ``det(Q[J + [row], J + [col]]) / det(Q_J)``; a determinant-based oracle
    independent of the linear solve used by :func:`schur_complement`.
    """
    kernel = as_kernel(kernel)
    j = _coerce_subset(j, kernel.n)
    if row in j.indices or col in j.indices:
        raise ValueError("row and col must lie outside J")
    q = kernel.q
    sel = list(j.indices)
    det_j = _det_j(q, sel)
    rows, cols = sel + [row], sel + [col]
    return float(np.linalg.det(q[np.ix_(rows, cols)]) / det_j)


def _det_j(q, sel):
    if not sel:
        return 1.0
    q_j = q[np.ix_(sel, sel)]
    lam = np.linalg.eigvalsh(matcore.symmetrize(q_j))
    if not (lam[-1] > 0 and lam[0] > matcore.SINGULAR_RTOL * lam[-1]):
        raise SingularSystemError("Q_J is singular", pivot=float(lam[0]))
    return float(np.linalg.det(q_j))


def crabtree_haynsworth_matrix(kernel, j) -> np.ndarray:
    """All entries of ``S_C(Q_J)`` by bordered minors, in the J-first frame."""
    kernel = as_kernel(kernel)
    j = _coerce_subset(j, kernel.n)
    q = kernel.q
    sel = list(j.indices)
    rest = j.complement(kernel.n)
    det_j = _det_j(q, sel)
    r = rest.size
    k = len(sel)
    bordered = np.empty((r, r, k + 1, k + 1))
    base = q[np.ix_(sel, sel)]
    bordered[:, :, :k, :k] = base
    bordered[:, :, :k, k] = q[np.ix_(sel, rest)][None, :, :].transpose(0, 2, 1)
    bordered[:, :, k, :k] = q[np.ix_(rest, sel)][:, None, :]
    bordered[:, :, k, k] = q[np.ix_(rest, rest)]
    return np.linalg.det(bordered) / det_j


def nystrom_approximation(p: KernelPartition, allow_pinv=True) -> np.ndarray:
    """``[[Q_J, Y], [Y.T, Y.T Q_J^{-1} Y]]`` in the J-first frame."""
    if p.k == 0:
        return np.zeros_like(p.z)
    x, used_pinv = solve_block(p.q_j, p.y, allow_pinv)
    if used_pinv:
        warnings.warn("Q_J is numerically singular; using pseudo-inverse",
                      NearSingularWarning, stacklevel=2)
    low = matcore.symmetrize(p.y.T @ x)
    return np.block([[p.q_j, p.y], [p.y.T, low]])


def frobenius_product_identity(a, b) -> float:
    """Entry sum of ``(A.T A) * (B B.T)``; equals ``||A B||_F ** 2``."""
    return float(build_kernel(a, b).q.sum())


def all_subsets(n, k):
    """Iterate over all k-subsets of range(n) in lexicographic order."""
    return combinations(range(n), k)
