"""Randomized identity and inequality checks on product kernels.

Each check takes one random instance and returns ``(passed, detail)``.
:func:`run_property_suite` drives them over many instances; the CLI
``verify`` subcommand is a thin wrapper around it.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from . import matcore
from .kernel import (KernelPartition, Subset, all_subsets, build_kernel,
                     crabtree_haynsworth_matrix, partition, schur_complement, solve_block)
from .rescale import apply, optimal_weights

ENUMERATION_LIMIT = 5000


@dataclass
class Instance:
    seed: int
    a: np.ndarray
    b: np.ndarray
    j: Subset

    @property
    def n(self):
        return self.a.shape[1]


def instance_seed(seed, i):
    return int(np.random.SeedSequence([seed, i]).generate_state(1, np.uint64)[0])


def random_instance(n, k, seed) -> Instance:
    """A, B with ``m = p = n + 2`` standard normal entries, so Q is PD a.s."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n + 2, n))
    b = rng.standard_normal((n, n + 2))
    j = Subset.of(rng.choice(n, size=k, replace=False), n=n)
    return Instance(seed, a, b, j)


def faulty_schur(p: KernelPartition):
    """Schur complement with the sign of the correction flipped (mutation check)."""
    if p.k == 0:
        return p.z.copy()
    x, _ = solve_block(p.q_j, p.y)
    return p.z + p.y.T @ x


# ---------------------------------------------------------------- checks

def check_kernel_sum(inst, schur):
    q = build_kernel(inst.a, inst.b).q
    ab = inst.a @ inst.b
    lhs, rhs = float(q.sum()), float(np.sum(ab * ab))
    return abs(lhs - rhs) <= 1e-9 * max(rhs, matcore.ABS_FLOOR), f"{lhs!r} vs {rhs!r}"


def check_partition(inst, schur):
    kern = build_kernel(inst.a, inst.b)
    p = partition(kern, inst.j)
    ok = np.array_equal(p.to_original(p.assemble()), kern.q)
    return ok, "blocks reassemble to Q"


def check_error_identity(inst, schur):
    kern = build_kernel(inst.a, inst.b)
    p = partition(kern, inst.j)
    ab = inst.a @ inst.b
    err2 = float(np.sum((ab - apply(inst.a, inst.b, optimal_weights(kern, inst.j))) ** 2))
    s_sum = float(schur(p).sum()) if p.z.size else 0.0
    ref = float(np.sum(ab * ab))
    return abs(err2 - s_sum) <= 1e-8 * max(ref, matcore.ABS_FLOOR), f"{err2!r} vs {s_sum!r}"


def check_crabtree_haynsworth(inst, schur):
    kern = build_kernel(inst.a, inst.b)
    p = partition(kern, inst.j)
    if p.z.size == 0:
        return True, "empty complement"
    s = schur(p)
    ch = crabtree_haynsworth_matrix(kern, inst.j)
    scale = max(np.max(np.abs(p.z)), matcore.ABS_FLOOR)
    dev = float(np.max(np.abs(s - ch)))
    return dev <= 1e-8 * scale, f"max deviation {dev:.3e}"


def check_fischer(inst, schur):
    q = build_kernel(inst.a, inst.b).q
    sel = list(inst.j.indices)
    det_j = matcore.det_spd(q[np.ix_(sel, sel)])
    for i in inst.j.complement(inst.n):
        ext = sel + [int(i)]
        lhs = matcore.det_spd(q[np.ix_(ext, ext)])
        if lhs > det_j * q[i, i] * (1 + 1e-10):
            return False, f"det(Q_J+{i})={lhs!r} > {det_j * q[i, i]!r}"
    return True, "det(Q_{J+i}) <= det(Q_J) Q_ii"


def check_diagonal_max(inst, schur):
    q = build_kernel(inst.a, inst.b).q
    top, dmax = float(q.max()), float(np.diag(q).max())
    return dmax > 0 and top <= dmax, f"max entry {top!r}, max diagonal {dmax!r}"


def check_schur_entry_bound(inst, schur):
    kern = build_kernel(inst.a, inst.b)
    p = partition(kern, inst.j)
    if p.z.size == 0:
        return True, "empty complement"
    smax, zmax = float(schur(p).max()), float(np.diag(p.z).max())
    return smax <= zmax * (1 + 1e-10), f"max S_C {smax!r}, max diag Z {zmax!r}"


def check_expected_trace(inst, schur):
    q = build_kernel(inst.a, inst.b).q
    n, k = inst.n, inst.j.k
    if comb(n, k) > ENUMERATION_LIMIT:
        return True, "skipped (too many subsets to enumerate)"
    lam = matcore.sym_eigen(q).eigenvalues
    dets, traces = [], []
    for sub in all_subsets(n, k):
        sel = list(sub)
        dets.append(matcore.det_spd(q[np.ix_(sel, sel)]))
        p = partition(q, sub)
        traces.append(float(np.trace(schur(p))) if p.z.size else 0.0)
    dets = np.asarray(dets)
    lhs = float(np.dot(dets / dets.sum(), traces))
    rhs = float((k + 1) * np.clip(lam[k:], 0, None).sum())
    return lhs <= rhs + 1e-9 * lam[0], f"E tr S_C = {lhs!r} <= {rhs!r}"


PROPERTIES = {
    "kernel_sum_identity": check_kernel_sum,
    "partition_reassembly": check_partition,
    "optimal_error_identity": check_error_identity,
    "crabtree_haynsworth": check_crabtree_haynsworth,
    "fischer_inequality": check_fischer,
    "diagonal_maximum": check_diagonal_max,
    "schur_entry_bound": check_schur_entry_bound,
    "expected_trace_bound": check_expected_trace,
}


@dataclass
class PropertyResult:
    name: str
    passed: bool
    checked: int
    failing_seed: int | None = None
    detail: str = ""


def run_property_suite(n, k, instances, seed=0, fault=False):
    """Run every property on ``instances`` random instances of size ``n``."""
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must lie in [1, {n}]")
    schur = faulty_schur if fault else schur_complement
    results = {name: PropertyResult(name, True, 0) for name in PROPERTIES}
    for i in range(instances):
        s = instance_seed(seed, i)
        inst = random_instance(n, k, s)
        for name, fn in PROPERTIES.items():
            res = results[name]
            if not res.passed:
                continue
            ok, detail = fn(inst, schur)
            res.checked += 1
            if not ok:
                res.passed, res.failing_seed, res.detail = False, s, detail
    return list(results.values())
