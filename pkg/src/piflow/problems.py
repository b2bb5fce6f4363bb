"""Problem generators: random strongly convex QPs and l-infinity system identification."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal

from .core import ContractError, LinearObjective, Problem, QuadraticObjective, ConstraintSet


def random_qp(n, m, seed):
    """Random QP  min 1/2 x'(I + W'W)x + b'x  s.t.  Cx <= d.

    W, b, C, d have i.i.d. standard normal entries drawn (in that order)
    from ``numpy.random.default_rng(seed)``.
    """
    if n < 1 or m < 1:
        raise ContractError("n and m must be positive")
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((n, n))
    b = rng.standard_normal(n)
    C = rng.standard_normal((m, n))
    d = rng.standard_normal(m)
    H = np.eye(n) + W.T @ W
    H = 0.5 * (H + H.T)
    return Problem.quadratic(H, b, C, d)


# --------------------------------------------------------------------------
# system identification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TransferFunction:
    """Discrete-time rational transfer function in descending powers of z.

    The denominator is normalized to be monic.
    """

    num: tuple
    den: tuple

    def __post_init__(self):
        num = np.trim_zeros(np.atleast_1d(np.asarray(self.num, dtype=float)), "f")
        den = np.trim_zeros(np.atleast_1d(np.asarray(self.den, dtype=float)), "f")
        if den.size == 0:
            raise ContractError("denominator must be nonzero")
        if num.size == 0:
            num = np.zeros(1)
        if num.size > den.size:
            raise ContractError("transfer function must be proper")
        object.__setattr__(self, "num", tuple(num / den[0]))
        object.__setattr__(self, "den", tuple(den / den[0]))

    def poles(self):
        return np.roots(self.den) if len(self.den) > 1 else np.array([])

    def is_stable(self):
        return bool(np.all(np.abs(self.poles()) < 1))

    def difference_coefficients(self):
        """(b, a) in powers of z^-1, as used by ``scipy.signal.lfilter``."""
        a = np.asarray(self.den)
        b = np.zeros_like(a)
        b[a.size - len(self.num):] = self.num
        return b, a


PLANT = TransferFunction(num=(-0.4, 0.32, 0.26), den=(1.0, -1.9, 1.21, -0.259))


def simulate_tf(tf, u):
    """Zero-initial-condition response of ``tf`` to the input sequence ``u``."""
    u = np.asarray(u, dtype=float)
    if u.size == 0:
        raise ContractError("input sequence is empty")
    b, a = tf.difference_coefficients()
    return signal.lfilter(b, a, u)


def default_poles():
    return np.round(np.linspace(-0.9, 0.9, 37), 12)


def filter_bank(u, poles=None):
    """Regressor matrix with column i the response of z/(z - p_i) to u.

    Each column follows z_i(k) = p_i z_i(k-1) + u(k) with zero pre-history.
    """
    u = np.asarray(u, dtype=float)
    poles = default_poles() if poles is None else np.atleast_1d(np.asarray(poles, dtype=float))
    if np.any(np.abs(poles) >= 1):
        raise ContractError("basis poles must lie strictly inside the unit circle")
    Z = np.empty((u.size, poles.size))
    for i, p in enumerate(poles):
        Z[:, i] = signal.lfilter([1.0], [1.0, -p], u)
    return Z


@dataclass
class SysIdDataset:
    u: np.ndarray
    y_clean: np.ndarray
    y_noisy: np.ndarray
    Z: np.ndarray
    split: int
    poles: np.ndarray

    @property
    def ident(self):
        """(Z, y_noisy) on the identification segment."""
        return self.Z[:self.split], self.y_noisy[:self.split]

    @property
    def validation(self):
        """(Z, y_clean) on the validation segment."""
        return self.Z[self.split:], self.y_clean[self.split:]

    def to_csv(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "u", "y_clean", "y_noisy"])
            for k in range(self.u.size):
                w.writerow([k, repr(float(self.u[k])), repr(float(self.y_clean[k])),
                            repr(float(self.y_noisy[k]))])

    @classmethod
    def from_csv(cls, path, split, poles=None):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        u, y_clean, y_noisy = data[:, 1], data[:, 2], data[:, 3]
        poles = default_poles() if poles is None else np.asarray(poles, dtype=float)
        return cls(u, y_clean, y_noisy, filter_bank(u, poles), int(split), poles)


def make_sysid_dataset(n_ident=500, n_val=200, noise_var=0.1, seed=0,
                       poles=None, plant=PLANT):
    """Excite ``plant`` with U[0, 1] input and add N(0, noise_var) output noise.

    The first ``n_ident`` samples form the identification segment; the
    filter bank runs continuously over both segments.
    """
    rng = np.random.default_rng(seed)
    n_total = n_ident + n_val
    u = rng.uniform(0.0, 1.0, n_total)
    y_clean = simulate_tf(plant, u)
    noise = rng.normal(0.0, np.sqrt(noise_var), n_total) if noise_var > 0 else np.zeros(n_total)
    poles = default_poles() if poles is None else np.asarray(poles, dtype=float)
    return SysIdDataset(u, y_clean, y_clean + noise, filter_bank(u, poles), n_ident, poles)


def build_linf_lp(Z, y, ridge=0.0):
    """l-infinity fit  min Delta  s.t.  -Delta <= Z_k theta - y_k <= Delta.

    Decision vector is (theta, Delta). With ``ridge > 0`` the objective
    gains ridge/2 * ||(theta, Delta)||^2, which makes it strongly convex.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    y = np.asarray(y, dtype=float)
    if Z.shape[0] != y.size:
        raise ContractError(f"Z has {Z.shape[0]} rows but y has length {y.size}")
    if ridge < 0:
        raise ContractError("ridge must be nonnegative")
    N, P = Z.shape
    ones = np.ones((N, 1))
    C = np.block([[Z, -ones], [-Z, -ones]])
    d = np.concatenate([y, -y])
    c = np.zeros(P + 1)
    c[-1] = 1.0
    cons = ConstraintSet(C, d)
    if ridge > 0:
        return Problem(QuadraticObjective(ridge * np.eye(P + 1), c), cons)
    return Problem(LinearObjective(c), cons)


def fit_index(y_val, y_hat):
    """100 * (1 - ||y - y_hat|| / ||y - mean(y)||)."""
    y_val = np.asarray(y_val, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y_val.shape != y_hat.shape or y_val.size < 2:
        raise ContractError("need equal-length sequences of at least two samples")
    denom = np.linalg.norm(y_val - y_val.mean())
    if denom == 0:
        raise ZeroDivisionError("validation output is constant; FIT is undefined")
    return float(100.0 * (1.0 - np.linalg.norm(y_val - y_hat) / denom))
