"""
Switched modes of a scalar problem
==================================

For ``min w*x**2/2  s.t.  x <= 0`` both flows are piecewise linear: one
mode while the constraint is active, one while it is not. Their
eigenvalues show how the proportional gain speeds up the active mode.
"""

import numpy as np

from piflow import scalar_mode_eigenvalues, scalar_mode_matrices
from piflow.analysis import compare_scalar_modes, pdgd_best_abscissa

w, rho = 1.0, 0.5

# the two mode matrices of the PI flow
A1, A2 = scalar_mode_matrices(w, rho, k_i=4.0, k_p=1.0)
print("A1 =\n", A1)
print("A2 =\n", A2)

# closed-form eigenvalues agree with a generic eigensolver
modes = scalar_mode_eigenvalues(w, rho, 4.0, 1.0)
print("mode 1:", np.round(modes.mode1, 4), " eig:", np.round(np.linalg.eigvals(A1), 4))
print("mode 2:", modes.mode2)

# whatever eta is, PDGD cannot push the active-mode abscissa below -(w+rho)/2
etas = np.logspace(-2, 2, 9)
pdgd = [scalar_mode_eigenvalues(w, rho, eta, 0.0).abscissa1 for eta in etas]
print("\nPDGD abscissa over eta:", np.round(pdgd, 3))
print("PDGD best:", pdgd_best_abscissa(w, rho))

# PI with k_p > 0 and k_i past the complex threshold goes further
print("\n k_p   k_i   PI abscissa  verdict")
for k_p in (0.0, 0.5, 1.0, 2.0):
    k_i = 1.5 * (k_p + w + rho) ** 2 / 4
    cmp = compare_scalar_modes(w, rho, k_i, k_p)
    print(f"{k_p:4.1f} {k_i:5.2f} {cmp['pi'].abscissa1:12.3f}  {cmp['verdict']}"
          f"{'  (beats PDGD best)' if cmp['beats_pdgd_best'] else ''}")
