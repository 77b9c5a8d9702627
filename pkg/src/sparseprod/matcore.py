"""Dense real matrices and the handful of factorizations the rest of the
package relies on.

Matrices are plain two-dimensional ``float64`` numpy arrays (row-major).
:func:`as_matrix` is the single validation gate: it rejects ragged,
non-2D and non-finite input.  Everything else in this module is a thin,
checked wrapper over numpy / LAPACK.

The module also owns the plain-text matrix format used by the CLI::

    rows cols
    a11 a12 ... a1c
    ...
"""
from __future__ import annotations

import io
import os
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .exceptions import (MatrixFormatError, NotPSDError, ShapeError,
                         SingularSystemError)

#: relative eigenvalue threshold below which a PSD matrix is treated as singular
SINGULAR_RTOL = 1e-10
#: relative eigenvalue threshold below which a matrix is declared indefinite
INDEFINITE_RTOL = 1e-8
#: absolute tolerance floor
ABS_FLOOR = 1e-14


class SymEigen(NamedTuple):
    """Eigen-decomposition of a symmetric matrix, eigenvalues non-increasing."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        u, lam = self.eigenvectors, self.eigenvalues
        return (u * lam) @ u.T


def as_matrix(m, name="matrix") -> np.ndarray:
    """Validate ``m`` and return it as a 2-D float64 array."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be two-dimensional, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _square(m, name="matrix"):
    m = as_matrix(m, name)
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"{name} must be square, got {m.shape}")
    return m


def matmul(a, b) -> np.ndarray:
    """Exact dense product ``a @ b``; the ground truth for all error measures."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def frobenius_norm(m) -> float:
    m = as_matrix(m)
    return float(np.sqrt(np.sum(m * m)))


def gram(a) -> np.ndarray:
    """Return ``a.T @ a``, symmetrized so that it is exactly symmetric."""
    a = as_matrix(a)
    g = a.T @ a
    return 0.5 * (g + g.T)


def hadamard(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise ShapeError(f"hadamard product needs equal shapes, got {a.shape} and {b.shape}")
    return a * b


def symmetrize(m) -> np.ndarray:
    return 0.5 * (m + m.T)


def sym_eigen(m) -> SymEigen:
    """Eigen-decomposition of a symmetric matrix.

    The input is symmetrized as ``(M + M.T) / 2`` first.  Eigenvalues are
    returned in non-increasing order with matching eigenvector columns.
    """
    m = symmetrize(_square(m))
    lam, u = np.linalg.eigh(m)
    return SymEigen(lam[::-1].copy(), u[:, ::-1].copy())


def _eigvals_desc(m):
    return np.linalg.eigvalsh(symmetrize(m))[::-1]


def _check_psd(lam):
    """Raise if the spectrum ``lam`` (non-increasing) is indefinite."""
    if lam.size == 0:
        return
    lam_max = max(abs(lam[0]), abs(lam[-1]))
    if lam[-1] < -INDEFINITE_RTOL * lam_max - ABS_FLOOR:
        raise NotPSDError(f"matrix is indefinite (smallest eigenvalue {lam[-1]:.3e})",
                          min_eigenvalue=float(lam[-1]))


def cholesky_factor(q) -> np.ndarray:
    """Return ``X`` with ``X.T @ X == q`` for a symmetric PSD ``q``.

    For well-conditioned input ``X`` is the upper Cholesky factor.  When the
    smallest eigenvalue falls below ``1e-10 * lambda_max`` the symmetric
    square root ``U diag(sqrt(max(lam, 0))) U.T`` is returned instead.
    """
    q = symmetrize(_square(q, "q"))
    if q.shape[0] == 0:
        return q.copy()
    eig = sym_eigen(q)
    lam = eig.eigenvalues
    _check_psd(lam)
    if lam[-1] > SINGULAR_RTOL * lam[0]:
        try:
            return np.linalg.cholesky(q).T
        except np.linalg.LinAlgError:
            pass
    u = eig.eigenvectors
    root = np.sqrt(np.clip(lam, 0.0, None))
    return (u * root) @ u.T


def solve_spd(q, rhs) -> np.ndarray:
    """Solve ``q w = rhs`` for symmetric positive definite ``q``.

    Raises :class:`SingularSystemError` when the smallest eigenvalue of ``q``
    is not above ``1e-10 * lambda_max``.
    """
    q = symmetrize(_square(q, "q"))
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape[0] != q.shape[0]:
        raise ShapeError(f"rhs length {rhs.shape[0]} does not match system size {q.shape[0]}")
    if q.shape[0] == 0:
        return rhs.copy()
    lam = _eigvals_desc(q)
    if not lam[-1] > SINGULAR_RTOL * lam[0] or lam[0] <= 0:
        raise SingularSystemError(
            f"system is singular to working precision (pivot {lam[-1]:.3e})",
            pivot=float(lam[-1]))
    return sla.cho_solve(sla.cho_factor(q, lower=True), rhs)


def det_spd(q) -> float:
    """Determinant of a symmetric PSD matrix via its Cholesky factor.

    Returns 0.0 for numerically rank-deficient input.
    """
    q = symmetrize(_square(q, "q"))
    if q.shape[0] == 0:
        return 1.0
    try:
        l = np.linalg.cholesky(q)
    except np.linalg.LinAlgError:
        _check_psd(_eigvals_desc(q))
        return 0.0
    return float(np.prod(np.diag(l)) ** 2)


def svd_values(m) -> np.ndarray:
    """Singular values, non-increasing, via the eigenvalues of the smaller Gram matrix."""
    m = as_matrix(m)
    g = m.T @ m if m.shape[0] >= m.shape[1] else m @ m.T
    lam = _eigvals_desc(g)
    return np.sqrt(np.clip(lam, 0.0, None))


def pinv_psd(q, rtol=SINGULAR_RTOL):
    """Pseudo-inverse of a symmetric PSD matrix by eigenvalue clipping.

    Returns ``(pinv, clipped)`` where ``clipped`` tells whether any
    eigenvalue fell below ``rtol * lambda_max`` and was discarded.
    """
    eig = sym_eigen(q)
    lam, u = eig.eigenvalues, eig.eigenvectors
    if lam.size == 0:
        return np.zeros_like(q), False
    cutoff = rtol * max(lam[0], 0.0)
    keep = lam > cutoff
    inv = np.zeros_like(lam)
    inv[keep] = 1.0 / lam[keep]
    return (u * inv) @ u.T, bool((~keep).any())


# ---------------------------------------------------------------- text format

def format_matrix(m) -> str:
    """Serialize to the text format; floats use the shortest round-trip repr."""
    m = as_matrix(m)
    out = io.StringIO()
    out.write(f"{m.shape[0]} {m.shape[1]}\n")
    for row in m:
        out.write(" ".join(repr(float(x)) for x in row))
        out.write("\n")
    return out.getvalue()


def parse_matrix(text: str) -> np.ndarray:
    """Parse the text format, reporting 1-based line numbers on error."""
    lines = text.splitlines()
    if not lines:
        raise MatrixFormatError("empty input", line=1)
    head = lines[0].split()
    if len(head) != 2:
        raise MatrixFormatError("header must be 'rows cols'", line=1)
    try:
        rows, cols = int(head[0]), int(head[1])
    except ValueError:
        raise MatrixFormatError("header must contain two integers", line=1) from None
    if rows <= 0 or cols <= 0:
        raise MatrixFormatError("dimensions must be positive", line=1)
    body = lines[1:]
    # tolerate trailing blank lines only
    while body and not body[-1].strip():
        body.pop()
    if len(body) != rows:
        # point at the first missing or first surplus line
        raise MatrixFormatError(f"expected {rows} data rows, found {len(body)}",
                                line=min(len(body), rows) + 2)
    out = np.empty((rows, cols))
    for i, line in enumerate(body):
        fields = line.split()
        if len(fields) != cols:
            raise MatrixFormatError(f"expected {cols} values, found {len(fields)}", line=i + 2)
        for j, tok in enumerate(fields):
            try:
                v = float(tok)
            except ValueError:
                raise MatrixFormatError(f"cannot parse {tok!r} as a number", line=i + 2) from None
            if not np.isfinite(v):
                raise MatrixFormatError(f"non-finite value {tok!r}", line=i + 2)
            out[i, j] = v
    return out


def read_matrix(path) -> np.ndarray:
    with open(os.fspath(path), encoding="utf-8") as fh:
        return parse_matrix(fh.read())


def write_matrix(path, m) -> None:
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        fh.write(format_matrix(m))
