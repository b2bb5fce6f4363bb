"""Convergence-rate tools.

* :func:`spectral_bounds` and :func:`rate_bound` evaluate the exponential
  rate guarantee of the PI flow for quadratic problems,
  ``mu = min(k_p*c_lo/2, (2*k_i*g_lo - k_p*g_hi**2)/k_i)``; trajectories
  then decay at least like ``exp(-mu*t/2)``.
* :func:`scalar_mode_matrices` / :func:`scalar_mode_eigenvalues` give the
  two linear modes of both flows on ``min w*x**2/2 s.t. x <= 0``.

The active mask along a trajectory is unknown, so the bounds on
``H + rho*C'*Gamma*C`` bracket it between Gamma = 0 and Gamma = I.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ContractError, RankDeficiencyError

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class SpectralBounds:
    g_lo: float
    g_hi: float
    c_lo: float
    c_hi: float

    @property
    def full_rank(self):
        return self.c_lo > RANK_RTOL * self.c_hi


@dataclass(frozen=True)
class RateReport:
    mu: float
    hypotheses_ok: bool
    violations: list = field(default_factory=list)


def spectral_bounds(problem, rho, strict=True):
    """Eigenvalue ranges of CC' and of H + rho*C'*Gamma*C over Gamma in [0, I].

    Raises :class:`RankDeficiencyError` when CC' is numerically singular,
    unless ``strict`` is False (the bounds are then returned as computed).
    """
    qf = problem.quadratic_form
    if qf is None:
        raise ContractError("spectral bounds need a quadratic objective")
    if not rho > 0:
        raise ContractError("rho must be positive")
    H, _ = qf
    C = problem.C
    cc = np.linalg.eigvalsh(C @ C.T)
    c_lo, c_hi = float(max(cc[0], 0.0)), float(cc[-1])
    if strict and not c_lo > RANK_RTOL * c_hi:
        raise RankDeficiencyError(
            f"CC' is numerically singular (lambda_min={cc[0]:.3g}, lambda_max={c_hi:.3g})")
    g_lo = float(np.linalg.eigvalsh(H)[0])
    g_hi = float(np.linalg.eigvalsh(H + rho * C.T @ C)[-1])
    return SpectralBounds(g_lo, g_hi, c_lo, c_hi)


def rate_bound(gains, bounds):
    """Rate guarantee for the PI flow, with the hypotheses it rests on.

    Violations are reported, never raised; ``mu`` only carries meaning when
    ``hypotheses_ok`` is True.
    """
    k_i, k_p, rho = gains.k_i, gains.k_p, gains.rho
    mu = min(0.5 * k_p * bounds.c_lo,
             (2.0 * k_i * bounds.g_lo - k_p * bounds.g_hi ** 2) / k_i)
    violations = []
    if not bounds.full_rank:
        violations.append("CC' singular")
    if not rho * bounds.c_hi < 1.0:
        violations.append("rho >= 1/c_hi")
    if not k_p > 0:
        violations.append("K_p not positive")
    if k_i < k_p:
        violations.append("K_i < K_p")
    return RateReport(float(mu), not violations, violations)


def decay_slope(t, dist, start_fraction=0.5, floor=1e-10):
    """Least-squares slope of log(dist) against t over the tail of a run.

    Uses samples with ``t >= start_fraction * t[-1]``; samples at or below
    ``floor`` (integration noise) are dropped. Returns nan when fewer than
    two samples remain.
    """
    t = np.asarray(t, dtype=float)
    dist = np.asarray(dist, dtype=float)
    keep = (t >= start_fraction * t[-1]) & (dist > floor)
    if keep.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(t[keep], np.log(dist[keep]), 1)
    return float(slope)


# --------------------------------------------------------------------------
# scalar switched-mode example
# --------------------------------------------------------------------------

def scalar_mode_matrices(w, rho, k_i, k_p):
    """Mode matrices (A1, A2) of the PI flow on min w*x**2/2 s.t. x <= 0.

    A1 governs the active mode (rho*x + lam >= 0), A2 the inactive one.
    The PDGD matrices are the special case k_p = 0, k_i = eta.
    """
    if not (w > 0 and rho > 0):
        raise ContractError("w and rho must be positive")
    A1 = np.array([[-w - rho, -1.0],
                   [k_i - k_p * (w + rho), -k_p]])
    A2 = np.array([[-w, 0.0],
                   [-w * k_p, -k_i / rho]])
    return A1, A2


@dataclass(frozen=True)
class ScalarModes:
    mode1: tuple       # eigenvalues of A1 (complex)
    mode2: tuple       # eigenvalues of A2 (real)
    abscissa1: float
    abscissa2: float
    mode1_complex: bool


def scalar_mode_eigenvalues(w, rho, k_i, k_p):
    """Closed-form eigenvalues of both modes.

    A1 has trace -(k_p + w + rho) and determinant k_i, so its eigenvalues
    are (-(k_p+w+rho) +- sqrt((k_p+w+rho)**2 - 4*k_i)) / 2. A2 is lower
    triangular with eigenvalues -w and -k_i/rho.
    """
    if not (w > 0 and rho > 0):
        raise ContractError("w and rho must be positive")
    s = k_p + w + rho
    disc = s * s - 4.0 * k_i
    root = np.sqrt(complex(disc))
    mode1 = ((-s + root) / 2.0, (-s - root) / 2.0)
    mode2 = (-float(w), -k_i / rho)
    return ScalarModes(
        mode1=mode1,
        mode2=mode2,
        abscissa1=max(ev.real for ev in mode1),
        abscissa2=max(mode2),
        mode1_complex=disc < 0,
    )


def pdgd_best_abscissa(w, rho):
    """Most negative mode-1 abscissa PDGD can reach over all eta > 0."""
    return -(w + rho) / 2.0


def compare_scalar_modes(w, rho, k_i, k_p):
    """Mode-1 verdict of PI against PDGD run with eta = k_i."""
    pi = scalar_mode_eigenvalues(w, rho, k_i, k_p)
    pd = scalar_mode_eigenvalues(w, rho, k_i, 0.0)
    if pi.abscissa1 < pd.abscissa1:
        verdict = "PI faster"
    elif pi.abscissa1 > pd.abscissa1:
        verdict = "PDGD faster"
    else:
        verdict = "equal"
    return {
        "pi": pi,
        "pdgd": pd,
        "verdict": verdict,
        "beats_pdgd_best": pi.abscissa1 < pdgd_best_abscissa(w, rho),
    }
