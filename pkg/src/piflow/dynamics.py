"""Vector fields of the primal-dual (PDGD) and proportional-integral (PI) flows.

Both flows share the primal line

    xdot = -grad f(x) - C' max(rho*h(x) + lam, 0)

and differ in the multiplier line:

    PDGD:  lamdot = eta * dg/dlam
    PI:    lamdot = k_i * dg/dlam + k_p * C xdot
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ContractError

FLOWS = ("pdgd", "pi")


@dataclass(frozen=True)
class KktResidual:
    stationarity: float
    complementarity: float
    primal_infeasibility: float
    dual_infeasibility: float

    @property
    def total(self):
        return max(self.stationarity, self.complementarity,
                   self.primal_infeasibility, self.dual_infeasibility)


def _xdot(problem, rho, x, lam):
    pos = np.maximum(rho * (problem.C @ x - problem.d) + lam, 0.0)
    xdot = -problem.grad_f(x) - problem.C.T @ pos
    return xdot, (pos - lam) / rho


def pdgd_field(problem, gains, state):
    """Return (xdot, lamdot) of the primal-dual gradient flow at ``state``."""
    x = problem.check_x(state.x)
    lam = problem.check_lambda(state.lam)
    xdot, glam = _xdot(problem, gains.rho, x, lam)
    return xdot, gains.eta * glam


def pi_field(problem, gains, state):
    """Return (xdot, lamdot) of the PI flow at ``state``.

    xdot is evaluated once and reused in the proportional term.
    """
    x = problem.check_x(state.x)
    lam = problem.check_lambda(state.lam)
    xdot, glam = _xdot(problem, gains.rho, x, lam)
    return xdot, gains.k_i * glam + gains.k_p * (problem.C @ xdot)


def make_field(problem, gains, flow):
    """Flattened right-hand side ``f(t, z) -> zdot`` for the integrator.

    Skips the per-call dimension checks of :func:`pdgd_field` and
    :func:`pi_field`; the arithmetic is identical.
    """
    if flow not in FLOWS:
        raise ContractError(f"flow must be one of {FLOWS}, got {flow!r}")
    n = problem.n
    C, d, CT = problem.C, problem.d, problem.C.T
    grad_f = problem.objective.gradient
    rho, eta, k_i, k_p = gains.rho, gains.eta, gains.k_i, gains.k_p

    if flow == "pdgd":
        def field(t, z):
            x, lam = z[:n], z[n:]
            pos = np.maximum(rho * (C @ x - d) + lam, 0.0)
            xdot = -grad_f(x) - CT @ pos
            glam = (pos - lam) / rho
            return np.concatenate([xdot, eta * glam])
    else:
        def field(t, z):
            x, lam = z[:n], z[n:]
            pos = np.maximum(rho * (C @ x - d) + lam, 0.0)
            xdot = -grad_f(x) - CT @ pos
            glam = (pos - lam) / rho
            return np.concatenate([xdot, k_i * glam + k_p * (C @ xdot)])
    return field


def kkt_residual(problem, x, lam):
    """Four-part KKT residual of (x, lam).

    stationarity uses the raw multipliers; complementarity is
    sum_j |max(lam_j, 0) * h_j(x)|.
    """
    x = problem.check_x(x)
    lam = problem.check_lambda(lam)
    h = problem.h(x)
    stat = np.linalg.norm(problem.grad_f(x) + problem.C.T @ lam)
    comp = np.abs(np.maximum(lam, 0.0) * h).sum()
    pinf = np.linalg.norm(np.maximum(h, 0.0))
    dinf = np.linalg.norm(np.maximum(-lam, 0.0))
    return KktResidual(float(stat), float(comp), float(pinf), float(dinf))
