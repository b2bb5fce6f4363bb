"""
PDGD against PI on random quadratic programs
============================================

Each seed draws ``min x'(I + W'W)x/2 + b'x  s.t.  Cx <= d`` and integrates
both flows over the same horizon. The count that matters is the number of
accepted integrator steps. The full-size benchmark (n=50, m=45, 20 seeds)
is ``piflow qp-bench``; this script runs a smaller version.
"""

import numpy as np

from piflow import GainConfig
from piflow.experiments import ExperimentConfig, cmd_qp_bench

cfg = ExperimentConfig(experiment="qp_bench", seeds=list(range(8)), n=20, m=15,
                       gains=GainConfig(eta=1.0, k_i=1.0, k_p=-0.7, t_final=30.0))
summary = cmd_qp_bench(cfg)

print("seed   N_pdgd   N_pi   kkt_pdgd   kkt_pi")
rows = {(r.seed, r.flow): r for r in summary.records}
for s in cfg.seeds:
    a, b = rows[s, "pdgd"], rows[s, "pi"]
    print(f"{s:4d} {a.accepted_steps:8d} {b.accepted_steps:6d} {a.final_kkt:10.2e} {b.final_kkt:8.2e}")

wins = sum(rows[s, "pi"].accepted_steps < rows[s, "pdgd"].accepted_steps for s in cfg.seeds)
print(f"\nPI needed fewer steps in {wins}/{len(cfg.seeds)} runs")
for flow, agg in summary.aggregates.items():
    print(f"{flow}: mean N {agg['N_mean']:.1f}, std {agg['N_std']:.1f}")

# distance to the exact optimum (active-set enumeration for m <= 12, else a
# KKT polish of the endpoints)
dist = np.array([r.final_dist for r in summary.records if r.final_dist is not None])
print("largest final distance to the optimum:", dist.max())
