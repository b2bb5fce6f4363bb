"""Ground-truth solvers independent of the flows.

``active_set_qp`` and ``lp_vertex`` enumerate exhaustively and are meant for
desk-scale problems only. ``kkt_polish`` refines an approximate primal-dual
point of a larger QP by Newton steps on the equality-constrained KKT system
of a guessed active set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import ContractError, InfeasibleProblemError
from .dynamics import kkt_residual

SIGN_TOL = 1e-10


@dataclass(frozen=True)
class OracleSolution:
    x_star: np.ndarray
    lambda_star: np.ndarray
    active_set: tuple
    objective: float


class UnboundedProblemError(RuntimeError):
    pass


def _solve_equality_kkt(H, b, C, d, S):
    n = H.shape[0]
    k = len(S)
    if k == 0:
        return np.linalg.solve(H, -b), np.zeros(0)
    CS = C[list(S)]
    K = np.block([[H, CS.T], [CS, np.zeros((k, k))]])
    rhs = np.concatenate([-b, d[list(S)]])
    sol = np.linalg.solve(K, rhs)
    return sol[:n], sol[n:]


def active_set_qp(problem, max_enum=20, order_seed=None):
    """Exact QP solution by enumerating every subset of constraints.

    Each subset S gives the KKT system [H, C_S'; C_S, 0](x, lam_S) =
    (-b, d_S); a candidate is kept when lam_S >= -1e-10 and Cx - d <= 1e-10.
    Singular subsets are skipped. Among valid candidates the lowest
    objective wins, ties going to the lexicographically smallest set.
    ``order_seed`` shuffles the enumeration order (the answer must not
    depend on it).
    """
    qf = problem.quadratic_form
    if qf is None:
        raise ContractError("active_set_qp needs a quadratic objective")
    m = problem.m
    if m > max_enum:
        raise ContractError(f"m={m} exceeds max_enum={max_enum}")
    H, b = qf
    C, d = problem.C, problem.d
    subsets = [S for k in range(m + 1) for S in itertools.combinations(range(m), k)]
    if order_seed is not None:
        np.random.default_rng(order_seed).shuffle(subsets)
    best = None
    for S in subsets:
        try:
            x, lam_S = _solve_equality_kkt(H, b, C, d, S)
        except np.linalg.LinAlgError:
            continue
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(lam_S))):
            continue
        if np.any(lam_S < -SIGN_TOL) or np.any(C @ x - d > SIGN_TOL):
            continue
        obj = problem.f(x)
        key = (obj, S)
        if best is None or key < best[0]:
            lam = np.zeros(m)
            lam[list(S)] = lam_S
            best = (key, x, lam)
    if best is None:
        raise InfeasibleProblemError("no subset of constraints yields a KKT point")
    (obj, S), x, lam = best
    return OracleSolution(x, lam, S, obj)


def kkt_polish(problem, x, lam, tol=1e-9, max_iter=50):
    """Refine an approximate KKT point of a strongly convex QP.

    Starting from the active set {j : lam_j + h_j(x) > 0}, repeatedly solve
    the equality KKT system and update the set from the new iterate
    (primal-dual active set iteration) until it stops changing. Raises
    :class:`InfeasibleProblemError` if the result fails ``tol``.
    """
    qf = problem.quadratic_form
    if qf is None:
        raise ContractError("kkt_polish needs a quadratic objective")
    H, b = qf
    C, d = problem.C, problem.d
    x = problem.check_x(x)
    lam = problem.check_lambda(lam)
    S = tuple(np.flatnonzero(lam + (C @ x - d) > 0))
    seen = set()
    for _ in range(max_iter):
        xs, lam_S = _solve_equality_kkt(H, b, C, d, S)
        lam_full = np.zeros(problem.m)
        lam_full[list(S)] = lam_S
        S_new = tuple(np.flatnonzero(lam_full + (C @ xs - d) > 0))
        if S_new == S or S_new in seen:
            break
        seen.add(S)
        S = S_new
    res = kkt_residual(problem, xs, lam_full).total
    if not res <= tol:
        raise InfeasibleProblemError(f"polish did not reach tol (residual {res:.3g})")
    return OracleSolution(xs, lam_full, S, problem.f(xs))


def lp_vertex(c, A, e, max_vars=10):
    """Exact LP  min c'y  s.t.  Ay <= e  by vertex enumeration.

    Every choice of ``len(c)`` rows is solved as a square system; feasible
    vertices are ranked by objective. The multipliers come from an optimal
    basis whose dual solution of A_B' lam = -c is nonnegative; the absence
    of such a basis means the LP is unbounded below.
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    e = np.asarray(e, dtype=float)
    nv = c.size
    M = A.shape[0]
    if A.shape[1] != nv or e.size != M:
        raise ContractError("inconsistent LP dimensions")
    if nv > max_vars:
        raise ContractError(f"{nv} variables exceed the enumeration limit {max_vars}")
    if np.linalg.matrix_rank(A) < nv:
        raise UnboundedProblemError("constraint matrix is rank deficient; no vertices exist")
    scale = max(1.0, np.abs(e).max())
    vertices = []
    for B in itertools.combinations(range(M), nv):
        AB = A[list(B)]
        try:
            y = np.linalg.solve(AB, e[list(B)])
        except np.linalg.LinAlgError:
            continue
        if np.linalg.cond(AB) > 1e12:
            continue
        if np.all(A @ y - e <= 1e-9 * scale):
            vertices.append((float(c @ y), B, y))
    if not vertices:
        raise InfeasibleProblemError("no feasible vertex")
    best_val = min(v[0] for v in vertices)
    tol = 1e-9 * max(1.0, abs(best_val))
    for val, B, y in sorted(vertices, key=lambda v: (v[0], v[1])):
        if val > best_val + tol:
            break
        lam_B = np.linalg.solve(A[list(B)].T, -c)
        if np.all(lam_B >= -SIGN_TOL):
            lam = np.zeros(M)
            lam[list(B)] = np.maximum(lam_B, 0.0)
            return OracleSolution(y, lam, B, val)
    raise UnboundedProblemError("no dual-feasible optimal basis; LP is unbounded below")


def lp_vertex_problem(problem, **kw):
    """:func:`lp_vertex` on a Problem with a linear objective."""
    c = getattr(problem.objective, "c", None)
    if c is None:
        raise ContractError("problem objective is not linear")
    return lp_vertex(c, problem.C, problem.d, **kw)
