"""Smooth augmented Lagrangian for affine inequality constraints.

Each constraint contributes

    g_j = lam_j * h_j + rho/2 * h_j**2     if rho*h_j + lam_j >= 0
        = -lam_j**2 / (2*rho)              otherwise

which is continuous with a continuous gradient, so the flows built on it
need no projection of the multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ContractError


def _check_rho(rho):
    if not np.all(np.asarray(rho) > 0):
        raise ContractError(f"rho must be positive, got {rho}")


@dataclass(frozen=True)
class PenaltyEval:
    value: float
    active_mask: np.ndarray


def penalty_value(h, lam, rho):
    """Per-constraint penalty; works elementwise on scalars or arrays."""
    _check_rho(rho)
    h = np.asarray(h, dtype=float)
    lam = np.asarray(lam, dtype=float)
    active = rho * h + lam >= 0
    out = np.where(active, lam * h + 0.5 * rho * h * h, -lam * lam / (2.0 * rho))
    return float(out) if out.ndim == 0 else out


def penalty(problem, x, lam, rho):
    """Total penalty g(x, lam) with the active mask (diagonal of Gamma)."""
    _check_rho(rho)
    x = problem.check_x(x)
    lam = problem.check_lambda(lam)
    h = problem.h(x)
    active = rho * h + lam >= 0
    vals = np.where(active, lam * h + 0.5 * rho * h * h, -lam * lam / (2.0 * rho))
    return PenaltyEval(float(vals.sum()), active)


def grad_x_penalty(problem, x, lam, rho):
    """sum_j max(rho*h_j + lam_j, 0) * C_j."""
    _check_rho(rho)
    x = problem.check_x(x)
    lam = problem.check_lambda(lam)
    return problem.C.T @ np.maximum(rho * problem.h(x) + lam, 0.0)


def grad_lambda_penalty(problem, x, lam, rho):
    """(max(rho*h_j + lam_j, 0) - lam_j) / rho: h_j when active, -lam_j/rho otherwise."""
    _check_rho(rho)
    x = problem.check_x(x)
    lam = problem.check_lambda(lam)
    return (np.maximum(rho * problem.h(x) + lam, 0.0) - lam) / rho


def lagrangian_value(problem, x, lam, rho):
    return problem.f(problem.check_x(x)) + penalty(problem, x, lam, rho).value
