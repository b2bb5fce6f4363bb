"""Embedded Runge-Kutta pairs with adaptive step control, and the flow driver.

Two pairs are provided, both propagating the higher-order solution and both
first-same-as-last (FSAL):

* ``rk45``: Dormand-Prince 5(4).
* ``rk23``: Bogacki-Shampine 3(2).

The iteration count reported by benchmarks is the number of accepted steps.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (ContractError, GainConfig, IntegrationError, State,
                   Trace, TraceSample)
from .dynamics import make_field


@dataclass(frozen=True)
class Tableau:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray       # propagated (higher order) weights
    e: np.ndarray       # b - b_embedded
    order: int          # order of the propagated solution
    error_order: int    # order of the embedded solution

    @property
    def fsal(self):
        return self.c[-1] == 1 and np.array_equal(self.A[-1], self.b)


DORMAND_PRINCE = Tableau(
    c=np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1]),
    A=np.array([
        [0, 0, 0, 0, 0, 0, 0],
        [1 / 5, 0, 0, 0, 0, 0, 0],
        [3 / 40, 9 / 40, 0, 0, 0, 0, 0],
        [44 / 45, -56 / 15, 32 / 9, 0, 0, 0, 0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0, 0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0, 0],
        [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0],
    ]),
    b=np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0]),
    e=np.array([35 / 384 - 5179 / 57600, 0, 500 / 1113 - 7571 / 16695,
                125 / 192 - 393 / 640, -2187 / 6784 + 92097 / 339200,
                11 / 84 - 187 / 2100, -1 / 40]),
    order=5,
    error_order=4,
)

BOGACKI_SHAMPINE = Tableau(
    c=np.array([0, 1 / 2, 3 / 4, 1]),
    A=np.array([
        [0, 0, 0, 0],
        [1 / 2, 0, 0, 0],
        [0, 3 / 4, 0, 0],
        [2 / 9, 1 / 3, 4 / 9, 0],
    ]),
    b=np.array([2 / 9, 1 / 3, 4 / 9, 0]),
    e=np.array([2 / 9 - 7 / 24, 1 / 3 - 1 / 4, 4 / 9 - 1 / 3, -1 / 8]),
    order=3,
    error_order=2,
)

TABLEAUS = {"rk45": DORMAND_PRINCE, "rk23": BOGACKI_SHAMPINE}

MIN_FACTOR = 0.1
MAX_FACTOR = 5.0


@dataclass(frozen=True)
class IntegratorSpec:
    method: str = "rk45"
    rel_tol: float = 1e-3
    abs_tol: float = 1e-6
    h_init: Optional[float] = None
    h_max: Optional[float] = None
    safety_factor: float = 0.9

    def __post_init__(self):
        if self.method not in TABLEAUS:
            raise ContractError(f"unknown method {self.method!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ContractError("tolerances must be positive")
        if not 0 < self.safety_factor < 1:
            raise ContractError("safety_factor must lie in (0, 1)")
        if self.h_init is not None and not self.h_init > 0:
            raise ContractError("h_init must be positive")
        if self.h_max is not None and not self.h_max > 0:
            raise ContractError("h_max must be positive")

    @property
    def tableau(self):
        return TABLEAUS[self.method]

    @classmethod
    def from_gains(cls, gains: GainConfig, **kw):
        return cls(method=gains.integrator, rel_tol=gains.rel_tol,
                   abs_tol=gains.abs_tol, **kw)


@dataclass
class StepResult:
    t: float
    z: np.ndarray
    error: float
    accepted: bool
    h_next: float
    f_new: Optional[np.ndarray]  # field at the proposed point (FSAL)


def _rk_stages(field, t, z, h, tab, f0):
    s = tab.c.size
    K = np.empty((s, z.size))
    K[0] = f0
    for i in range(1, s):
        zi = z + h * (tab.A[i, :i] @ K[:i])
        K[i] = field(t + tab.c[i] * h, zi)
    return K


def error_norm(err, z, spec):
    r = err / (spec.abs_tol + spec.rel_tol * np.abs(z))
    return math.sqrt(float(r @ r) / r.size)


def step(field, t, z, h, spec, f0=None):
    """One embedded-pair step of size ``h`` from (t, z).

    The step is accepted when the RMS of the error estimate, weighted
    componentwise by ``abs_tol + rel_tol*|z|``, is at most one. ``h_next``
    follows ``h * safety * err**(-1/order)`` clipped to [0.1h, 5h] (never
    growing after a rejection).
    """
    if not h > 0:
        raise ContractError("step size must be positive")
    tab = spec.tableau
    z = np.asarray(z, dtype=float)
    if f0 is None:
        f0 = field(t, z)
        if not np.all(np.isfinite(f0)):
            raise IntegrationError("non-finite field evaluation", t=t, z=z)
    K = _rk_stages(field, t, z, h, tab, f0)
    z_new = z + h * (tab.b @ K)
    if tab.fsal:
        # last stage was evaluated at z_new
        f_new = K[-1]
    else:
        f_new = None
    err = error_norm(h * (tab.e @ K), z, spec)
    if not (math.isfinite(err) and math.isfinite(float(z_new.sum()))):
        return StepResult(t, z, math.inf, False, MIN_FACTOR * h, None)
    accepted = err <= 1.0
    k = tab.error_order + 1
    if err == 0.0:
        factor = MAX_FACTOR
    else:
        factor = spec.safety_factor * err ** (-1.0 / k)
    factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
    if not accepted:
        factor = min(factor, 1.0)
    h_next = h * factor
    if accepted:
        return StepResult(t + h, z_new, err, True, h_next, f_new)
    return StepResult(t, z, err, False, h_next, None)


def initial_step(field, t0, z0, f0, spec, direction_span):
    """Starting step from the usual two-derivative heuristic."""
    scale = spec.abs_tol + spec.rel_tol * np.abs(z0)
    d0 = np.sqrt(np.mean((z0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    z1 = z0 + h0 * f0
    f1 = field(t0 + h0, z1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    order = spec.tableau.error_order + 1
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / order)
    return min(100 * h0, h1, direction_span)


@dataclass
class OdeResult:
    t: float
    z: np.ndarray
    accepted_steps: int
    rejected_steps: int
    stop_reason: str


def integrate(field: Callable, z0, t0: float, t_final: float, spec: IntegratorSpec,
              callback: Optional[Callable] = None) -> OdeResult:
    """Adaptive integration of ``zdot = field(t, z)`` from t0 to t_final.

    ``callback(t, z, step_index)`` is invoked after every accepted step
    (and once at t0 with index 0); returning True stops the run early with
    reason ``kkt_tolerance_met``.
    """
    if not t_final > t0:
        raise ContractError("t_final must exceed the start time")
    z = np.array(z0, dtype=float)
    t = float(t0)
    span = t_final - t0
    h_max = spec.h_max if spec.h_max is not None else span
    h_min = 1e-14 * max(abs(t_final), span)
    f = field(t, z)
    if not np.all(np.isfinite(f)):
        raise IntegrationError("non-finite field at the initial state", t=t, z=z)
    h = spec.h_init if spec.h_init is not None else initial_step(field, t, z, f, spec, span)
    h = min(h, h_max)
    accepted = rejected = 0
    if callback is not None and callback(t, z, 0):
        return OdeResult(t, z, 0, 0, "kkt_tolerance_met")
    while True:
        remaining = t_final - t
        if remaining <= h_min:
            return OdeResult(t, z, accepted, rejected, "horizon_reached")
        last = h >= remaining
        h_try = remaining if last else h
        res = step(field, t, z, h_try, spec, f0=f)
        if res.accepted:
            accepted += 1
            t = t_final if last else res.t
            z = res.z
            f = res.f_new if res.f_new is not None else field(t, z)
            if not math.isfinite(float(f.sum())):
                raise IntegrationError("non-finite field evaluation", t=t, z=z)
            h = min(res.h_next, h_max)
            if callback is not None and callback(t, z, accepted):
                return OdeResult(t, z, accepted, rejected, "kkt_tolerance_met")
            if last:
                return OdeResult(t, z, accepted, rejected, "horizon_reached")
        else:
            rejected += 1
            h = res.h_next
            if h < h_min:
                return OdeResult(t, z, accepted, rejected, "step_underflow")


def integrate_fixed(field, z0, t0, t_final, h, method="rk45"):
    """Fixed-step integration with the propagated weights of ``method``."""
    tab = TABLEAUS[method]
    n_steps = int(round((t_final - t0) / h))
    if n_steps < 1 or not np.isclose(n_steps * h, t_final - t0):
        raise ContractError("h must divide the interval evenly")
    z = np.array(z0, dtype=float)
    t = float(t0)
    for _ in range(n_steps):
        K = _rk_stages(field, t, z, h, tab, field(t, z))
        z = z + h * (tab.b @ K)
        t += h
    return z


# --------------------------------------------------------------------------
# flow runs
# --------------------------------------------------------------------------

@dataclass
class RunResult:
    final_state: State
    trace: Trace
    stop_reason: str


def run(problem, gains: GainConfig, flow: str, x0=None, lambda0=None,
        spec: Optional[IntegratorSpec] = None, record_states=False,
        x_star=None) -> RunResult:
    """Integrate the PDGD or PI flow over [0, gains.t_final].

    A trace sample is recorded at t=0 and after every accepted step. With
    ``gains.kkt_stop_tol`` set, the run stops as soon as the KKT residual
    drops to that level. ``x_star`` fills ``dist_to_opt`` on the fly;
    ``record_states`` keeps (x, lambda) snapshots for later analysis.
    """
    n, m = problem.n, problem.m
    x0 = np.zeros(n) if x0 is None else problem.check_x(x0)
    lambda0 = np.zeros(m) if lambda0 is None else problem.check_lambda(lambda0)
    if spec is None:
        spec = IntegratorSpec.from_gains(gains)
    field = make_field(problem, gains, flow)
    trace = Trace()
    stop_tol = gains.kkt_stop_tol
    x_ref = None if x_star is None else np.asarray(x_star, dtype=float)
    C, d = problem.C, problem.d

    grad_f = problem.objective.gradient

    def record(t, z, k):
        # inline kkt_residual(problem, x, lam).total without the input checks
        x, lam = z[:n], z[n:]
        h = C @ x - d
        r = grad_f(x) + C.T @ lam
        pos_h = np.maximum(h, 0.0)
        neg_lam = np.maximum(-lam, 0.0)
        viol = math.sqrt(pos_h @ pos_h)
        kkt = max(math.sqrt(r @ r), float(np.abs(np.maximum(lam, 0.0) * h).sum()),
                  viol, math.sqrt(neg_lam @ neg_lam))
        dist = None if x_ref is None else float(np.linalg.norm(x - x_ref))
        trace.samples.append(TraceSample(
            t=float(t), step=k, constraint_violation=viol, kkt_total=kkt,
            dist_to_opt=dist,
            x=x.copy() if record_states else None,
            lam=lam.copy() if record_states else None))
        return stop_tol is not None and kkt <= stop_tol

    z0 = np.concatenate([x0, lambda0])
    start = time.perf_counter()
    out = integrate(field, z0, 0.0, gains.t_final, spec, callback=record)
    trace.wall_time = time.perf_counter() - start
    trace.accepted_steps = out.accepted_steps
    trace.rejected_steps = out.rejected_steps
    return RunResult(State.from_z(out.z, n, out.t), trace, out.stop_reason)
