import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def naive_matmul(a, b):
    m, n = a.shape
    p = b.shape[1]
    out = np.zeros((m, p))
    for i in range(m):
        for j in range(p):
            s = 0.0
            for t in range(n):
                s += a[i, t] * b[t, j]
            out[i, j] = s
    return out


def kernel_oracle(a, b):
    """Q_ij = <A_i, A_j> <B^i, B^j> by explicit inner products."""
    n = a.shape[1]
    q = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            q[i, j] = np.dot(a[:, i], a[:, j]) * np.dot(b[i, :], b[j, :])
    return q


def lstsq_weights(a, b, idx):
    """Best weights on the rank-one terms ``idx`` by direct least squares on vec(AB)."""
    cols = np.stack([np.outer(a[:, i], b[i, :]).ravel() for i in idx], axis=1)
    w, *_ = np.linalg.lstsq(cols, (a @ b).ravel(), rcond=None)
    return w


def random_spd(rng, n, extra=2):
    x = rng.standard_normal((n + extra, n))
    return x.T @ x
