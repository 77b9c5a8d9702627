"""Seeded experiment harness comparing selection and rescaling methods.

Each matrix instance has i.i.d. standard normal ``A`` (m x n) and ``B``
(n x p).  For every instance, method, ``k`` and trial a record with the
relative error in dB is produced.  All randomness is derived from
``master_seed`` through :class:`numpy.random.SeedSequence`:

* instance ``i``: entropy ``(master_seed, 0, i)``
* selection stream: ``(master_seed, 1, i, selection_code, k, trial)``

The selection stream does not depend on the rescale rule, so all rescalings
of one selection method see the same subset (a paired comparison).  Every
cell is therefore replayable on its own and the output does not depend on
evaluation order or thread count.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import matcore
from .approx import GAUSSIAN_METHOD, finish_product, jl_approximate
from .exceptions import ConfigError
from .kernel import ProductKernel
from .rescale import RESCALE_RULES
from .select import SELECTORS, MHConfig, SelectionContext, select

CSV_HEADER = ["matrix_id", "selection", "rescale", "k", "trial",
              "abs_error", "rel_error_db", "wall_time_micros"]

# stable integer codes mixed into per-cell seeds; never renumber
SELECTION_CODES = {"uniform": 1, "power": 2, "determinant_exact": 3,
                   "determinant_mh": 4, "greedy": 5, "jl": 6}
DETERMINISTIC = {"greedy"}


@dataclass(frozen=True, order=True)
class BenchMethod:
    """A (selection, rescale) pair; the Gaussian sketch is ``("jl", "none")``."""
    selection: str
    rescale: str

    def __post_init__(self):
        if self.selection == "jl":
            if self.rescale != "none":
                raise ConfigError("the jl baseline takes no rescale rule")
            return
        if self.selection not in SELECTORS:
            raise ConfigError(f"unknown selection {self.selection!r}")
        if self.rescale not in RESCALE_RULES:
            raise ConfigError(f"unknown rescale rule {self.rescale!r}")

    @property
    def tag(self):
        return "jl" if self.selection == "jl" else f"{self.selection}+{self.rescale}"

    @classmethod
    def parse(cls, text):
        """Parse ``selection+rescale``, ``jl`` or ``uniform-n-over-k``.

        CLI spellings (``det-mh``, ``n-over-k``) are accepted too.
        """
        text = text.strip()
        if text == "jl":
            return cls("jl", "none")
        if text == "uniform-n-over-k":
            return cls("uniform", "n_over_k")
        if "+" not in text:
            raise ConfigError(f"method {text!r} is not of the form selection+rescale")
        sel, resc = text.split("+", 1)
        return cls(SELECTION_ALIASES.get(sel, sel), RESCALE_ALIASES.get(resc, resc))


SELECTION_ALIASES = {"det-mh": "determinant_mh", "det-exact": "determinant_exact"}
RESCALE_ALIASES = {"n-over-k": "n_over_k"}


def standard_methods():
    """The default method grid: all selections under both
    rescalings, plus the two non-adaptive baselines."""
    out = [BenchMethod(s, r) for s in ("uniform", "power", "determinant_mh", "greedy")
           for r in ("power", "optimal")]
    return out + [BenchMethod("uniform", "n_over_k"), BenchMethod("jl", "none")]


@dataclass
class ExperimentConfig:
    m: int = 60
    n: int = 15
    p: int = 90
    num_matrices: int = 200
    trials_per_matrix: int = 20
    k_values: list = None
    methods: list = field(default_factory=standard_methods)
    master_seed: int = 0
    mh_config: MHConfig = field(default_factory=lambda: MHConfig(burn_in=100))
    timing: bool = False

    def __post_init__(self):
        if self.k_values is None:
            self.k_values = list(range(1, self.n + 1))
        self.methods = [BenchMethod.parse(x) if isinstance(x, str) else x for x in self.methods]
        self.validate()

    def validate(self):
        for name in ("m", "n", "p", "num_matrices", "trials_per_matrix"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not self.k_values:
            raise ConfigError("k_values is empty")
        for k in self.k_values:
            if not 1 <= k <= self.n:
                raise ConfigError(f"k={k} outside [1, {self.n}]")
        if not self.methods:
            raise ConfigError("no methods given")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("duplicate methods")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError("master_seed must fit in 64 unsigned bits")

    def manifest(self):
        d = asdict(self)
        d["methods"] = [m.tag for m in self.methods]
        d["gaussian_method"] = GAUSSIAN_METHOD
        d["numpy_version"] = np.__version__
        d["seed_derivation"] = "numpy.random.SeedSequence(entropy=...)"
        return d


@dataclass(frozen=True)
class ExperimentRecord:
    matrix_id: int
    selection: str
    rescale: str
    k: int
    trial: int
    abs_error: float
    rel_error_db: float
    wall_time_micros: int = 0

    def sort_key(self):
        return (self.matrix_id, self.selection, self.rescale, self.k, self.trial)


def instance_rng(master_seed, matrix_id):
    return np.random.default_rng(np.random.SeedSequence([master_seed, 0, matrix_id]))


def cell_rng(master_seed, matrix_id, selection, k, trial):
    code = SELECTION_CODES[selection]
    return np.random.default_rng(
        np.random.SeedSequence([master_seed, 1, matrix_id, code, k, trial]))


def draw_instance(cfg, matrix_id):
    rng = instance_rng(cfg.master_seed, matrix_id)
    a = rng.standard_normal((cfg.m, cfg.n))
    b = rng.standard_normal((cfg.n, cfg.p))
    return a, b


def _run_matrix(cfg: ExperimentConfig, matrix_id: int):
    a, b = draw_instance(cfg, matrix_id)
    exact = a @ b
    kernel = ProductKernel.from_factors(a, b)
    by_sel = defaultdict(list)
    for meth in cfg.methods:
        by_sel[meth.selection].append(meth.rescale)

    clock = time.perf_counter_ns if cfg.timing else (lambda: 0)
    records = []
    for k in cfg.k_values:
        for sel, rules in by_sel.items():
            deterministic = sel in DETERMINISTIC
            runs = 1 if deterministic else cfg.trials_per_matrix
            for trial in range(runs):
                rng = cell_rng(cfg.master_seed, matrix_id, sel, k, trial)
                if sel == "jl":
                    t0 = clock()
                    res = jl_approximate(a, b, k, rng, exact=exact)
                    cells = [("none", res, clock() - t0)]
                else:
                    t0 = clock()
                    subset = select(sel, SelectionContext(kernel, k, rng), cfg.mh_config)
                    t_sel = clock() - t0
                    cells = []
                    for rule in rules:
                        t1 = clock()
                        res = finish_product(a, b, subset, rule, kernel, exact)
                        cells.append((rule, res, t_sel + clock() - t1))
                # deterministic methods run once but are reported for every trial
                trials = range(cfg.trials_per_matrix) if deterministic else (trial,)
                for rule, res, ns in cells:
                    for t in trials:
                        records.append(ExperimentRecord(
                            matrix_id, sel, rule, int(k), t, res.abs_error_frobenius,
                            res.rel_error_db, int(ns // 1000)))
    return records


def run_experiment(cfg: ExperimentConfig, workers: int = 1):
    """Run the full grid; records come back in canonical sorted order."""
    cfg.validate()
    ids = range(cfg.num_matrices)
    if workers <= 1:
        chunks = [_run_matrix(cfg, i) for i in ids]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda i: _run_matrix(cfg, i), ids))
    records = [r for chunk in chunks for r in chunk]
    records.sort(key=ExperimentRecord.sort_key)
    return records


def expected_record_count(cfg: ExperimentConfig):
    return cfg.num_matrices * cfg.trials_per_matrix * len(cfg.methods) * len(cfg.k_values)


# ---------------------------------------------------------------- output

def _fmt(x):
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(records, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([_fmt(getattr(r, col)) for col in CSV_HEADER])


def to_csv(records) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


def read_csv(fh):
    out = []
    for row in csv.DictReader(fh):
        out.append(ExperimentRecord(
            int(row["matrix_id"]), row["selection"], row["rescale"], int(row["k"]),
            int(row["trial"]), float(row["abs_error"]), float(row["rel_error_db"]),
            int(row["wall_time_micros"])))
    return out


def write_manifest(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg.manifest(), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class SummaryRow:
    selection: str
    rescale: str
    k: int
    mean_db: float
    stderr_db: float
    count: int
    mean_linear: float

    @property
    def method(self):
        return "jl" if self.selection == "jl" else f"{self.selection}+{self.rescale}"


def summarize(records):
    """Per (selection, rescale, k): mean and standard error of the dB values.

    ``mean_linear`` is the mean of the linear relative errors
    ``10 ** (dB / 20)``, for readers who prefer averaging before the log.
    """
    if not records:
        raise ValueError("cannot summarize an empty record list")
    groups = defaultdict(list)
    for r in records:
        groups[(r.selection, r.rescale, r.k)].append(r.rel_error_db)
    rows = []
    for (sel, resc, k), vals in sorted(groups.items()):
        v = np.asarray(vals)
        mean = float(np.mean(v))
        if v.size > 1 and np.all(np.isfinite(v)):
            se = float(np.std(v, ddof=1) / math.sqrt(v.size))
        else:
            se = 0.0 if v.size == 1 else float("nan")
        rows.append(SummaryRow(sel, resc, k, mean, se, int(v.size),
                               float(np.mean(10.0 ** (v / 20.0)))))
    return rows


def format_summary(rows) -> str:
    lines = [f"{'method':<28}{'k':>4}{'mean dB':>12}{'stderr':>10}{'count':>8}"]
    for r in rows:
        lines.append(f"{r.method:<28}{r.k:>4}{r.mean_db:>12.4f}{r.stderr_db:>10.4f}{r.count:>8}")
    return "\n".join(lines)


def write_summary_csv(rows, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["selection", "rescale", "k", "mean_db", "stderr_db", "count", "mean_linear"])
    for r in rows:
        w.writerow([r.selection, r.rescale, r.k, _fmt(r.mean_db), _fmt(r.stderr_db),
                    r.count, _fmt(r.mean_linear)])


def check_record(record, a, b, rtol=1e-9):
    """True when ``rel_error_db`` agrees with ``abs_error`` and the instance norms."""
    scale = matcore.frobenius_norm(a) * matcore.frobenius_norm(b)
    if record.abs_error == 0:
        return record.rel_error_db == float("-inf")
    expect = 20.0 * math.log10(record.abs_error / scale)
    return abs(expect - record.rel_error_db) <= rtol * max(1.0, abs(expect))
