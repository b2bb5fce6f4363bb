import numpy as np
import pytest

from piflow import ConstraintSet, ContractError, GainConfig, Problem, constraint_violation
from piflow.core import QuadraticObjective, State, Trace, TraceSample


@pytest.mark.parametrize("C, d, x, expected", [
    ([[1.0]], [0.0], [-3.0], 0.0),
    ([[1.0]], [0.0], [2.0], 2.0),
    ([[1.0], [-1.0]], [1.0, 1.0], [2.0], 1.0),
])
def test_constraint_violation_examples(C, d, x, expected):
    p = Problem.quadratic([[1.0]], [0.0], C, d)
    assert constraint_violation(p, x) == expected


def test_constraint_violation_zero_iff_feasible(rng):
    C = rng.standard_normal((5, 3))
    d = rng.standard_normal(5)
    p = Problem.quadratic(np.eye(3), np.zeros(3), C, d)
    for _ in range(200):
        x = 2 * rng.standard_normal(3)
        feasible = np.all(C @ x - d <= 0)
        assert (constraint_violation(p, x) == 0.0) == feasible


def test_constraint_violation_dimension_mismatch():
    p = Problem.quadratic([[1.0]], [0.0], [[1.0]], [0.0])
    with pytest.raises(ContractError):
        constraint_violation(p, [1.0, 2.0])


def test_constraint_set_shapes():
    cs = ConstraintSet([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], [1, 2, 3])
    assert (cs.m, cs.n) == (3, 2)
    assert cs.h(np.zeros(2)).shape == (3,)
    with pytest.raises(ContractError):
        ConstraintSet([[1.0, 2.0]], [1.0, 2.0])


def test_quadratic_gradient_matches_formula(rng):
    for _ in range(20):
        W = rng.standard_normal((6, 6))
        H = np.eye(6) + W.T @ W
        b = rng.standard_normal(6)
        obj = QuadraticObjective(H, b)
        x = rng.standard_normal(6)
        ref = H @ x + b
        assert np.linalg.norm(obj.gradient(x) - ref) <= 1e-12 * np.linalg.norm(ref)
        assert obj.value(x) == pytest.approx(0.5 * x @ H @ x + b @ x, rel=1e-14)


def test_hessian_bounds_from_eigensolver():
    p = Problem.quadratic(np.diag([1.0, 4.0]), [0.0, 0.0], [[1.0, 0.0]], [0.0])
    assert p.hessian_bounds == (1.0, 4.0)
    with pytest.raises(ContractError):
        Problem(p.objective, p.constraints, hessian_bounds=(2.0, 1.0))


@pytest.mark.parametrize("kw", [dict(rho=0.0), dict(eta=-1.0), dict(k_i=0.0),
                                dict(rel_tol=0.0), dict(t_final=-1.0),
                                dict(integrator="euler"), dict(kkt_stop_tol=0.0)])
def test_gain_config_rejects_invalid(kw):
    with pytest.raises(ContractError):
        GainConfig(**kw)


def test_gain_config_allows_negative_kp():
    assert GainConfig(k_p=-0.7).k_p == -0.7


def test_state_roundtrip():
    s = State(np.array([1.0, 2.0]), np.array([3.0]), 0.5)
    back = State.from_z(s.z, 2, s.t)
    assert np.array_equal(back.x, s.x) and np.array_equal(back.lam, s.lam) and back.t == 0.5


def test_trace_reference_and_threshold():
    tr = Trace()
    for k, (t, kkt) in enumerate([(0.0, 1.0), (0.5, 0.1), (1.0, 0.01)]):
        tr.samples.append(TraceSample(t, k, 0.0, kkt, x=np.array([float(k)])))
    tr.set_reference(np.array([2.0]))
    assert list(tr.dist_to_opt) == [2.0, 1.0, 0.0]
    assert tr.first_step_below(0.1) == 1
    assert tr.first_step_below(1e-3) is None
