"""Shared domain types: objectives, problems, states, gains and traces."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class ContractError(ValueError):
    """Raised when an input violates a documented precondition."""


class IntegrationError(RuntimeError):
    """Raised when a flow cannot be integrated (non-finite dynamics).

    The offending time and state are attached for diagnostics.
    """

    def __init__(self, message, t=None, z=None):
        super().__init__(message)
        self.t = t
        self.z = z


class RankDeficiencyError(ContractError):
    pass


class InfeasibleProblemError(RuntimeError):
    pass


def as_vector(v, name="vector"):
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise ContractError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


# --------------------------------------------------------------------------
# objectives
# --------------------------------------------------------------------------

class Objective:
    """A differentiable objective with value and gradient handles."""

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError


class CallableObjective(Objective):
    def __init__(self, value, gradient):
        self._value = value
        self._gradient = gradient

    def value(self, x):
        return float(self._value(x))

    def gradient(self, x):
        return np.asarray(self._gradient(x), dtype=float)


class QuadraticObjective(Objective):
    """f(x) = 1/2 x'Hx + b'x with H symmetric positive (semi)definite."""

    def __init__(self, H, b):
        H = np.atleast_2d(np.asarray(H, dtype=float))
        b = as_vector(b, "b")
        if H.shape != (b.size, b.size):
            raise ContractError(f"H has shape {H.shape}, expected {(b.size, b.size)}")
        if not np.allclose(H, H.T, rtol=1e-12, atol=1e-12):
            raise ContractError("H must be symmetric")
        self.H = H
        self.b = b

    def value(self, x):
        return float(0.5 * x @ (self.H @ x) + self.b @ x)

    def gradient(self, x):
        return self.H @ x + self.b


class LinearObjective(Objective):
    """f(x) = c'x. Not strongly convex; used for the l-infinity fitting LP."""

    def __init__(self, c):
        self.c = as_vector(c, "c")

    def value(self, x):
        return float(self.c @ x)

    def gradient(self, x):
        return self.c.copy()


# --------------------------------------------------------------------------
# problems
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstraintSet:
    """Affine inequality constraints h(x) = Cx - d <= 0."""

    C: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        d = as_vector(self.d, "d")
        if C.shape[0] != d.size:
            raise ContractError(f"C has {C.shape[0]} rows but d has length {d.size}")
        if C.shape[0] < 1 or C.shape[1] < 1:
            raise ContractError("need at least one constraint and one variable")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "d", d)

    @property
    def m(self):
        return self.C.shape[0]

    @property
    def n(self):
        return self.C.shape[1]

    def h(self, x):
        return self.C @ x - self.d


@dataclass(frozen=True)
class Problem:
    """min f(x) subject to Cx - d <= 0.

    ``hessian_bounds`` is the pair (strong convexity, smoothness). For
    quadratic objectives it is filled in from the eigenvalues of H when not
    given.
    """

    objective: Objective
    constraints: ConstraintSet
    hessian_bounds: Optional[tuple] = None

    def __post_init__(self):
        hb = self.hessian_bounds
        if hb is None and isinstance(self.objective, QuadraticObjective):
            ev = np.linalg.eigvalsh(self.objective.H)
            hb = (float(ev[0]), float(ev[-1]))
            if hb[0] <= 0:
                # only semidefinite: leave the bounds unset rather than lie
                hb = None
        if hb is not None:
            lo, hi = float(hb[0]), float(hb[1])
            if not 0 < lo <= hi:
                raise ContractError(f"hessian bounds must satisfy 0 < lo <= hi, got {hb}")
            hb = (lo, hi)
        object.__setattr__(self, "hessian_bounds", hb)
        if isinstance(self.objective, QuadraticObjective):
            if self.objective.b.size != self.constraints.n:
                raise ContractError("objective and constraints disagree on n")

    @classmethod
    def quadratic(cls, H, b, C, d):
        return cls(QuadraticObjective(H, b), ConstraintSet(C, d))

    @classmethod
    def linear(cls, c, C, d):
        return cls(LinearObjective(c), ConstraintSet(C, d))

    @property
    def n(self):
        return self.constraints.n

    @property
    def m(self):
        return self.constraints.m

    @property
    def C(self):
        return self.constraints.C

    @property
    def d(self):
        return self.constraints.d

    @property
    def quadratic_form(self):
        """(H, b) when the objective is quadratic, else None."""
        obj = self.objective
        if isinstance(obj, QuadraticObjective):
            return obj.H, obj.b
        return None

    def h(self, x):
        return self.constraints.h(x)

    def f(self, x):
        return self.objective.value(x)

    def grad_f(self, x):
        return self.objective.gradient(x)

    def check_x(self, x):
        x = as_vector(x, "x")
        if x.size != self.n:
            raise ContractError(f"x has length {x.size}, expected {self.n}")
        return x

    def check_lambda(self, lam):
        lam = as_vector(lam, "lambda")
        if lam.size != self.m:
            raise ContractError(f"lambda has length {lam.size}, expected {self.m}")
        return lam


def constraint_violation(problem, x):
    """Euclidean norm of max(Cx - d, 0); zero exactly when x is feasible."""
    x = problem.check_x(x)
    return float(np.linalg.norm(np.maximum(problem.h(x), 0.0)))


# --------------------------------------------------------------------------
# state, gains, traces
# --------------------------------------------------------------------------

@dataclass
class State:
    x: np.ndarray
    lam: np.ndarray
    t: float = 0.0

    @property
    def z(self):
        return np.concatenate([self.x, self.lam])

    @classmethod
    def from_z(cls, z, n, t=0.0):
        z = np.asarray(z, dtype=float)
        return cls(z[:n].copy(), z[n:].copy(), float(t))

    @classmethod
    def zeros(cls, problem):
        # default start: x = 0, lambda = 0
        return cls(np.zeros(problem.n), np.zeros(problem.m), 0.0)


INTEGRATORS = ("rk45", "rk23")


@dataclass(frozen=True)
class GainConfig:
    """Flow hyperparameters plus integrator settings.

    ``rho`` is the penalty weight, ``eta`` the PDGD dual gain, ``k_i`` and
    ``k_p`` the integral and proportional gains of the PI flow. ``k_p`` may
    have either sign.
    """

    rho: float = 1.0
    eta: float = 1.0
    k_i: float = 1.0
    k_p: float = 0.0
    integrator: str = "rk45"
    rel_tol: float = 1e-3
    abs_tol: float = 1e-6
    t_final: float = 30.0
    kkt_stop_tol: Optional[float] = None

    def __post_init__(self):
        for name in ("rho", "eta", "k_i", "rel_tol", "abs_tol", "t_final"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ContractError(f"{name} must be positive, got {val}")
        if not np.isfinite(self.k_p):
            raise ContractError("k_p must be finite")
        if self.integrator not in INTEGRATORS:
            raise ContractError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.kkt_stop_tol is not None and not self.kkt_stop_tol > 0:
            raise ContractError("kkt_stop_tol must be positive when given")

    def replace(self, **changes):
        from dataclasses import replace

        return replace(self, **changes)


@dataclass
class TraceSample:
    t: float
    step: int
    constraint_violation: float
    kkt_total: float
    dist_to_opt: Optional[float] = None
    x: Optional[np.ndarray] = None
    lam: Optional[np.ndarray] = None


@dataclass
class Trace:
    """Per-accepted-step diagnostics of one flow run."""

    samples: list = field(default_factory=list)
    accepted_steps: int = 0
    rejected_steps: int = 0
    wall_time: float = 0.0

    def __len__(self):
        return len(self.samples)

    def column(self, name):
        return np.array([getattr(s, name) for s in self.samples], dtype=float)

    @property
    def t(self):
        return self.column("t")

    @property
    def kkt_total(self):
        return self.column("kkt_total")

    @property
    def constraint_violation(self):
        return self.column("constraint_violation")

    @property
    def dist_to_opt(self):
        return np.array([np.nan if s.dist_to_opt is None else s.dist_to_opt
                         for s in self.samples])

    def states(self):
        """Stacked (x, lambda) snapshots; requires a run with recorded states."""
        if not self.samples or self.samples[0].x is None:
            raise ValueError("trace was recorded without state snapshots")
        X = np.array([s.x for s in self.samples])
        L = np.array([s.lam for s in self.samples])
        return X, L

    def set_reference(self, x_star):
        """Fill ``dist_to_opt`` from stored x snapshots."""
        x_star = np.asarray(x_star, dtype=float)
        for s in self.samples:
            if s.x is None:
                raise ValueError("trace was recorded without state snapshots")
            s.dist_to_opt = float(np.linalg.norm(s.x - x_star))

    def first_step_below(self, kkt_level):
        """Smallest step index whose KKT residual is <= kkt_level (None if never)."""
        for s in self.samples:
            if s.kkt_total <= kkt_level:
                return s.step
        return None
