import io
import json
import math

import numpy as np
import pytest

from sparseprod import bench as B
from sparseprod.exceptions import ConfigError


def small_cfg(**kw):
    base = dict(m=6, n=5, p=7, num_matrices=3, trials_per_matrix=2, k_values=[1, 3, 5],
                master_seed=1234)
    base.update(kw)
    return B.ExperimentConfig(**base)


def test_single_exact_record():
    cfg = B.ExperimentConfig(m=4, n=3, p=5, num_matrices=1, trials_per_matrix=1, k_values=[3],
                             methods=["greedy+optimal"])
    (rec,) = B.run_experiment(cfg)
    assert rec.rel_error_db == float("-inf") or rec.rel_error_db < -250
    assert (rec.selection, rec.rescale, rec.k, rec.trial) == ("greedy", "optimal", 3, 0)


def test_record_count_and_order():
    cfg = small_cfg()
    recs = B.run_experiment(cfg)
    assert len(recs) == B.expected_record_count(cfg)
    assert recs == sorted(recs, key=B.ExperimentRecord.sort_key)


def test_records_consistent_with_instances():
    cfg = small_cfg()
    recs = B.run_experiment(cfg)
    for rec in recs:
        a, b = B.draw_instance(cfg, rec.matrix_id)
        assert B.check_record(rec, a, b)


def test_deterministic_methods_replicated_across_trials():
    cfg = small_cfg(methods=["greedy+optimal", "greedy+power"])
    recs = B.run_experiment(cfg)
    by_cell = {}
    for r in recs:
        by_cell.setdefault((r.matrix_id, r.rescale, r.k), set()).add(r.abs_error)
    assert all(len(v) == 1 for v in by_cell.values())


def test_rescalings_share_the_subset():
    # paired design: optimal can never lose to power on the same subset
    cfg = small_cfg(methods=["uniform+power", "uniform+optimal", "power+power", "power+optimal"])
    recs = B.run_experiment(cfg)
    cells = {}
    for r in recs:
        cells.setdefault((r.matrix_id, r.selection, r.k, r.trial), {})[r.rescale] = r.abs_error
    for v in cells.values():
        assert v["optimal"] <= v["power"] * (1 + 1e-12)


def test_replay_is_byte_identical():
    cfg = small_cfg(methods=B.standard_methods())
    assert B.to_csv(B.run_experiment(cfg)) == B.to_csv(B.run_experiment(cfg))


def test_thread_count_does_not_matter():
    cfg = small_cfg(methods=B.standard_methods())
    assert B.to_csv(B.run_experiment(cfg, workers=1)) == B.to_csv(B.run_experiment(cfg, workers=3))


def test_seed_changes_output():
    assert B.to_csv(B.run_experiment(small_cfg())) != B.to_csv(B.run_experiment(small_cfg(master_seed=1)))


def test_cell_is_independently_replayable():
    cfg = small_cfg(methods=["uniform+optimal"])
    recs = B.run_experiment(cfg)
    one = B.ExperimentConfig(m=6, n=5, p=7, num_matrices=3, trials_per_matrix=2, k_values=[3],
                             master_seed=1234, methods=["uniform+optimal"])
    sub = [r for r in recs if r.k == 3]
    assert B.run_experiment(one) == sub


def test_csv_format():
    recs = [B.ExperimentRecord(0, "greedy", "optimal", 2, 0, 0.1, -20.0, 5),
            B.ExperimentRecord(0, "greedy", "optimal", 3, 0, 0.0, float("-inf"), 0)]
    text = B.to_csv(recs)
    lines = text.splitlines()
    assert lines[0] == "matrix_id,selection,rescale,k,trial,abs_error,rel_error_db,wall_time_micros"
    assert lines[1] == "0,greedy,optimal,2,0,0.10000000000000001,-20,5"
    assert lines[2].split(",")[6] == "-inf"
    back = B.read_csv(io.StringIO(text))
    assert back == recs


def test_timing_off_by_default():
    assert all(r.wall_time_micros == 0 for r in B.run_experiment(small_cfg()))


@pytest.mark.parametrize("kw", [dict(k_values=[0]), dict(k_values=[6]), dict(num_matrices=0),
                                dict(methods=[]), dict(methods=["jl", "jl"]),
                                dict(methods=["greedy+nonsense"]), dict(master_seed=-1),
                                dict(k_values=[])])
def test_invalid_config(kw):
    with pytest.raises(ConfigError):
        small_cfg(**kw)


def test_method_parsing():
    assert B.BenchMethod.parse("jl") == B.BenchMethod("jl", "none")
    assert B.BenchMethod.parse("uniform-n-over-k") == B.BenchMethod("uniform", "n_over_k")
    assert B.BenchMethod.parse("det-mh+optimal") == B.BenchMethod("determinant_mh", "optimal")
    assert B.BenchMethod.parse("power+n-over-k").tag == "power+n_over_k"
    with pytest.raises(ConfigError):
        B.BenchMethod.parse("greedy")


def test_default_k_grid():
    assert small_cfg(k_values=None).k_values == [1, 2, 3, 4, 5]


class TestSummarize:
    def test_single(self):
        rec = B.ExperimentRecord(0, "greedy", "optimal", 2, 0, 0.1, -12.5)
        (row,) = B.summarize([rec])
        assert row.mean_db == -12.5 and row.count == 1 and row.stderr_db == 0.0

    def test_db_domain_mean(self):
        recs = [B.ExperimentRecord(0, "uniform", "power", 2, t, 0.0, v) for t, v in enumerate([-10.0, -20.0])]
        (row,) = B.summarize(recs)
        assert row.mean_db == -15.0
        assert row.mean_linear == pytest.approx((10 ** -0.5 + 10 ** -1.0) / 2)

    def test_empty(self):
        with pytest.raises(ValueError):
            B.summarize([])

    def test_recomputation_oracle(self):
        cfg = small_cfg(methods=B.standard_methods())
        recs = B.run_experiment(cfg)
        rows = B.summarize(recs)
        assert len(rows) == len(cfg.methods) * len(cfg.k_values)
        for row in rows:
            vals = [r.rel_error_db for r in recs
                    if (r.selection, r.rescale, r.k) == (row.selection, row.rescale, row.k)]
            assert row.count == len(vals)
            assert row.mean_db == pytest.approx(sum(vals) / len(vals), rel=1e-12)
            mu = sum(vals) / len(vals)
            se = math.sqrt(sum((v - mu) ** 2 for v in vals) / (len(vals) - 1) / len(vals))
            assert row.stderr_db == pytest.approx(se, rel=1e-9, abs=1e-14, nan_ok=True)

    def test_summary_csv(self):
        rows = B.summarize(B.run_experiment(small_cfg()))
        buf = io.StringIO()
        B.write_summary_csv(rows, buf)
        assert buf.getvalue().splitlines()[0] == "selection,rescale,k,mean_db,stderr_db,count,mean_linear"
        assert "mean dB" in B.format_summary(rows)


def test_manifest(tmp_path):
    cfg = small_cfg()
    path = tmp_path / "m.json"
    B.write_manifest(cfg, path)
    d = json.loads(path.read_text())
    assert d["master_seed"] == 1234
    assert "ziggurat" in d["gaussian_method"]
    assert "jl" in d["methods"]
