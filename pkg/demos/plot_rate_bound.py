"""
Guaranteed against observed decay rate
======================================

With ``K_p > 0``, ``K_i >= K_p`` and ``rho < 1/lambda_max(CC')`` the PI
flow converges exponentially, at least like ``exp(-mu*t/2)``. This script
computes ``mu`` from spectral bounds and compares it with the slope of
``log||z(t) - z*||`` on an actual run.
"""

import numpy as np

from piflow import GainConfig, Problem, active_set_qp, rate_bound, run, spectral_bounds
from piflow.analysis import decay_slope

rng = np.random.default_rng(0)
n, m = 4, 2
Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
H = Q @ np.diag(rng.uniform(1.0, 1.3, n)) @ Q.T
C = rng.standard_normal((m, n))
problem = Problem.quadratic(0.5 * (H + H.T), 2 * rng.standard_normal(n), C,
                            0.5 * rng.standard_normal(m) - 1.0)

c_hi = np.linalg.eigvalsh(C @ C.T)[-1]
gains = GainConfig(rho=0.5 / c_hi, k_i=1.0, k_p=0.4, t_final=15.0, rel_tol=1e-10, abs_tol=1e-12)
bounds = spectral_bounds(problem, gains.rho)
report = rate_bound(gains, bounds)
print(bounds)
print(f"mu = {report.mu:.4f}, hypotheses ok: {report.hypotheses_ok}")

sol = active_set_qp(problem)
res = run(problem, gains, "pi", record_states=True)
X, L = res.trace.states()
dist = np.linalg.norm(np.hstack([X - sol.x_star, L - sol.lambda_star]), axis=1)
print(f"observed slope {decay_slope(res.trace.t, dist, floor=1e-9):.3f}"
      f" vs guaranteed {-report.mu / 2:.3f}")

# the bound is conservative; a negative K_p voids it
print(rate_bound(gains.replace(k_p=-0.7), bounds).violations)
