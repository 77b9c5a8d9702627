"""
Comparing methods over many random products
===========================================

A small version of the full comparison: Gaussian A (60 x 15) and B (15 x 90),
every selection under power and optimal rescaling, and two non-adaptive
baselines (uniform sampling with n/k weights and a Gaussian sketch).  The
full grid is ``sparseprod bench`` with its defaults.
"""
import sparseprod as sp
from sparseprod import bench

cfg = bench.ExperimentConfig(num_matrices=10, trials_per_matrix=5, k_values=[2, 4, 8, 12])
records = bench.run_experiment(cfg, workers=4)
rows = bench.summarize(records)

table = {(r.method, r.k): r.mean_db for r in rows}
methods = [m.tag for m in cfg.methods]
print(f"{'method':<24}" + "".join(f"{'k=' + str(k):>9}" for k in cfg.k_values))
for name in methods:
    print(f"{name:<24}" + "".join(f"{table[name, k]:9.2f}" for k in cfg.k_values))
print(f"\n{len(records)} records, mean relative error in dB")
