"""
l-infinity system identification
================================

A third-order plant is excited with uniform noise and its output is
measured with Gaussian noise. The model is a weighted sum of 37 first-order
filters ``z/(z - p)``; the weights minimize the worst-case residual, which
is a linear program in ``(theta, Delta)``. Both flows solve that LP.

The horizon here is shortened to keep the script quick; ``piflow sysid``
runs the full ``t_final = 1000``.
"""

import numpy as np
from scipy.optimize import linprog

from piflow import GainConfig, build_linf_lp, fit_index, make_sysid_dataset, run

ds = make_sysid_dataset(n_ident=500, n_val=200, noise_var=0.1, seed=0)
Z, y = ds.ident
Zv, yv = ds.validation
problem = build_linf_lp(Z, y)
print(f"LP: {problem.n} variables, {problem.m} constraints")

# exact optimum as a reference
ref = linprog(problem.objective.c, A_ub=problem.C, b_ub=problem.d,
              bounds=[(None, None)] * problem.n, method="highs").x
print(f"exact Delta* = {ref[-1]:.4f}, FIT = {fit_index(yv, Zv @ ref[:-1]):.1f}")

gains = GainConfig(rho=1.0, eta=1.0, k_i=1.0, k_p=-0.5, t_final=100.0, integrator="rk23")
for flow in ("pdgd", "pi"):
    res = run(problem, gains, flow)
    theta = res.final_state.x[:-1]
    print(f"{flow:>4}: N = {res.trace.accepted_steps:6d}, rejected = {res.trace.rejected_steps:6d}, "
          f"kkt = {res.trace.kkt_total[-1]:.3f}, FIT = {fit_index(yv, Zv @ theta):.1f}")

# the noise level caps what any l-infinity fit can reach on this data
print("output std %.3f, noise std %.3f" % (ds.y_clean.std(), np.sqrt(0.1)))
