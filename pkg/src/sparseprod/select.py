"""Subset selection strategies.

Every strategy takes a :class:`SelectionContext` (kernel, target size ``k``
and a ``numpy.random.Generator``) and returns a :class:`~.kernel.Subset`.

* :func:`select_uniform` -- uniform over k-subsets.
* :func:`select_power` -- sequential draws without replacement with
  probability proportional to ``Q_ii = ||A_i||^2 ||B^i||^2``.
* :func:`select_determinant_exact` -- exact draw from ``P(J) ~ det(Q_J)`` by
  enumeration of all k-subsets.
* :func:`select_determinant_mh` -- Metropolis-Hastings chain targeting the
  same law, for sizes beyond enumeration.
* :func:`select_greedy` -- the ``k`` largest diagonal entries.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from . import matcore
from .exceptions import (CardinalityError, DegenerateKernelError,
                         DegenerateWeightsError, EnumerationTooLargeError)
from .kernel import ProductKernel, Subset, as_kernel

#: largest number of k-subsets the exact sampler will enumerate
ENUMERATION_CAP = 2_000_000
_CHUNK = 50_000


@dataclass
class SelectionContext:
    kernel: ProductKernel
    k: int
    rng: np.random.Generator

    def __post_init__(self):
        self.kernel = as_kernel(self.kernel)
        if not isinstance(self.rng, np.random.Generator):
            self.rng = np.random.default_rng(self.rng)
        if not 1 <= self.k <= self.kernel.n:
            raise CardinalityError(f"k={self.k} must lie in [1, {self.kernel.n}]")

    @property
    def n(self):
        return self.kernel.n


@dataclass(frozen=True)
class MHConfig:
    burn_in: int = 1000
    thinning: int = 1
    proposal: str = "single_swap"

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.proposal != "single_swap":
            raise ValueError(f"unsupported proposal {self.proposal!r}")


def select_uniform(ctx: SelectionContext) -> Subset:
    idx = ctx.rng.choice(ctx.n, size=ctx.k, replace=False)
    return Subset.of(idx, n=ctx.n, provenance="uniform")


def select_power(ctx: SelectionContext) -> Subset:
    """Draw ``k`` distinct indices, each draw proportional to the remaining ``Q_ii``."""
    w = np.clip(np.asarray(ctx.kernel.diag, dtype=float), 0.0, None)
    if np.count_nonzero(w) < ctx.k:
        raise DegenerateWeightsError(
            f"only {np.count_nonzero(w)} positive weights for k={ctx.k}")
    w = w.copy()
    chosen = []
    for _ in range(ctx.k):
        cdf = np.cumsum(w)
        i = int(np.searchsorted(cdf, ctx.rng.random() * cdf[-1], side="right"))
        i = min(i, ctx.n - 1)
        while w[i] == 0.0:  # guards the measure-zero boundary case
            i -= 1
        chosen.append(i)
        w[i] = 0.0
    return Subset.of(chosen, n=ctx.n, provenance="power")


def select_greedy(ctx: SelectionContext) -> Subset:
    """Indices of the ``k`` largest ``Q_ii``; ties go to the lower index."""
    order = np.argsort(-np.asarray(ctx.kernel.diag), kind="stable")
    return Subset.of(order[:ctx.k], n=ctx.n, provenance="greedy")


# ---------------------------------------------------------------- determinant law

def _minor_dets(q, subsets):
    """Determinants of the principal minors ``q[J, J]`` for rows of ``subsets``."""
    out = np.empty(len(subsets))
    for s in range(0, len(subsets), _CHUNK):
        block = subsets[s:s + _CHUNK]
        out[s:s + _CHUNK] = np.linalg.det(q[block[:, :, None], block[:, None, :]])
    # principal minors of a PSD matrix are >= 0; negatives are rounding noise
    return np.clip(out, 0.0, None)


def _subset_array(n, k):
    from itertools import combinations
    return np.fromiter((i for c in combinations(range(n), k) for i in c),
                       dtype=np.intp, count=comb(n, k) * k).reshape(-1, k)


def determinant_law(kernel, k):
    """Enumerate the law ``P(J) = det(Q_J) / sum_J det(Q_J)`` over all k-subsets.

    Returns ``(subsets, probs)`` with ``subsets`` an ``(C(n, k), k)`` integer
    array in lexicographic order.
    """
    kernel = as_kernel(kernel)
    n = kernel.n
    if not 1 <= k <= n:
        raise CardinalityError(f"k={k} must lie in [1, {n}]")
    if comb(n, k) > ENUMERATION_CAP:
        raise EnumerationTooLargeError(
            f"C({n}, {k}) = {comb(n, k)} exceeds the cap of {ENUMERATION_CAP}; "
            "use select_determinant_mh instead")
    subsets = _subset_array(n, k)
    dets = _minor_dets(kernel.q, subsets)
    total = dets.sum()
    if not total > 0:
        raise DegenerateKernelError(f"all {k}x{k} principal minors vanish")
    return subsets, dets / total


def sample_determinant_exact(kernel, k, rng, size):
    """``size`` independent exact draws; returns an ``(size, k)`` index array."""
    subsets, probs = determinant_law(kernel, k)
    cdf = np.cumsum(probs)
    u = np.random.default_rng(rng).random(size) * cdf[-1]
    pick = np.minimum(np.searchsorted(cdf, u, side="right"), len(probs) - 1)
    return subsets[pick]


def select_determinant_exact(ctx: SelectionContext) -> Subset:
    drawn = sample_determinant_exact(ctx.kernel, ctx.k, ctx.rng, 1)[0]
    return Subset.of(drawn, n=ctx.n, provenance="determinant_exact")


class _DetCache:
    """Memoised principal-minor determinants keyed by the sorted index tuple."""

    def __init__(self, q):
        self.q = q
        self.store = {}

    def __call__(self, key):
        d = self.store.get(key)
        if d is None:
            idx = list(key)
            d = matcore.det_spd(self.q[np.ix_(idx, idx)])
            self.store[key] = d
        return d


def mh_chain(ctx: SelectionContext, cfg: MHConfig = MHConfig(), num_samples=1):
    """Run the single-swap Metropolis-Hastings chain; return ``num_samples`` subsets.

    A move removes a uniformly chosen ``j`` from ``J`` and inserts an outside
    index ``i`` chosen with probability ``Q_ii / sum_{l not in J} Q_ll``.  The
    acceptance ratio is

        det(Q_J') / det(Q_J) * (Q_jj / S_J') / (Q_ii / S_J)

    with ``S_J`` the outside diagonal mass, so the chain is reversible with
    respect to ``P(J) ~ det(Q_J)``.  The chain starts at the greedy subset;
    ``burn_in`` steps are discarded and every ``thinning``-th state is kept.
    """
    n, k, rng = ctx.n, ctx.k, ctx.rng
    if k == n:
        full = Subset(tuple(range(n)), "determinant_mh", n)
        return [full] * num_samples

    kern = ctx.kernel
    diag = np.clip(np.asarray(kern.diag, dtype=float), 0.0, None)
    det = _DetCache(kern.q)

    state = select_greedy(ctx).indices
    attempts = 0
    while not det(state) > 0:
        if attempts == 10:
            raise DegenerateKernelError("could not find a k-subset with det(Q_J) > 0")
        attempts += 1
        try:
            state = select_power(ctx).indices
        except DegenerateWeightsError as exc:
            raise DegenerateKernelError(str(exc)) from exc

    in_set = np.zeros(n, dtype=bool)
    in_set[list(state)] = True
    cur = list(state)
    cur_det = det(state)
    out_mass = diag[~in_set].sum()

    samples = []
    step = 0
    total_steps = cfg.burn_in + cfg.thinning * num_samples
    while step < total_steps:
        step += 1
        if out_mass > 0:
            pos = int(rng.integers(k))
            j = cur[pos]
            outside = np.flatnonzero(~in_set)
            cdf = np.cumsum(diag[outside])
            t = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
            i = int(outside[min(t, outside.size - 1)])
            u = rng.random()
            if diag[i] > 0:
                new = cur.copy()
                new[pos] = i
                key = tuple(sorted(new))
                new_det = det(key)
                new_mass = out_mass - diag[i] + diag[j]
                ratio = (new_det / cur_det) * (diag[j] / new_mass) / (diag[i] / out_mass) \
                    if new_det > 0 else 0.0
                if u < ratio:
                    cur = new
                    cur_det = new_det
                    in_set[j], in_set[i] = False, True
                    out_mass = diag[~in_set].sum()
        if step > cfg.burn_in and (step - cfg.burn_in) % cfg.thinning == 0:
            samples.append(Subset.of(cur, n=n, provenance="determinant_mh"))
    return samples


def select_determinant_mh(ctx: SelectionContext, cfg: MHConfig = MHConfig()) -> Subset:
    """One draw from the det-proportional law via :func:`mh_chain`."""
    return mh_chain(ctx, cfg, 1)[0]


SELECTORS = {
    "uniform": select_uniform,
    "power": select_power,
    "determinant_exact": select_determinant_exact,
    "determinant_mh": select_determinant_mh,
    "greedy": select_greedy,
}


def select(name, ctx, mh_config=None) -> Subset:
    """Dispatch on a selection tag."""
    if name == "determinant_mh":
        return select_determinant_mh(ctx, mh_config or MHConfig())
    try:
        fn = SELECTORS[name]
    except KeyError:
        raise ValueError(f"unknown selection {name!r}") from None
    return fn(ctx)
