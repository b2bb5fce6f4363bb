import numpy as np
import pytest

from piflow import Problem


def scalar_qp(w=1.0, d=0.0):
    """min w/2 x**2  s.t.  x <= d."""
    return Problem.quadratic([[w]], [0.0], [[1.0]], [d])


def conforming_qp(seed, n=4, m=2):
    """Well-conditioned QP with full-row-rank C: Hessian spectrum in [1, 1.3],
    singular values of C in [1, 1.2]."""
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    H = Q @ np.diag(rng.uniform(1.0, 1.3, n)) @ Q.T
    H = 0.5 * (H + H.T)
    U, _ = np.linalg.qr(rng.standard_normal((m, m)))
    V, _ = np.linalg.qr(rng.standard_normal((n, n)))
    C = U @ np.diag(rng.uniform(1.0, 1.2, m)) @ V[:m]
    b = 2.0 * rng.standard_normal(n)
    d = 0.5 * rng.standard_normal(m) - 1.0
    return Problem.quadratic(H, b, C, d)


def central_gradient(fun, x, step=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (fun(x + e) - fun(x - e)) / (2 * step)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# acceptance verdicts, printed once at the end of the session
ACCEPTANCE = []


def record_acceptance(criterion, ok, detail):
    ACCEPTANCE.append((criterion, bool(ok), detail))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"{criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
