import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from piflow import GainConfig, Problem, RankDeficiencyError, rate_bound, scalar_mode_eigenvalues
from piflow import scalar_mode_matrices, spectral_bounds
from piflow.analysis import (SpectralBounds, compare_scalar_modes, decay_slope,
                             pdgd_best_abscissa)


def test_spectral_bounds_identity():
    p = Problem.quadratic(np.eye(3), np.zeros(3), np.eye(3), np.zeros(3))
    sb = spectral_bounds(p, 0.5)
    assert (sb.g_lo, sb.g_hi, sb.c_lo, sb.c_hi) == pytest.approx((1.0, 1.5, 1.0, 1.0))


def test_spectral_bounds_diagonal():
    p = Problem.quadratic(np.diag([1.0, 4.0]), np.zeros(2), [[1.0, 0.0]], [0.0])
    sb = spectral_bounds(p, 0.5)
    assert (sb.g_lo, sb.g_hi, sb.c_lo, sb.c_hi) == pytest.approx((1.0, 4.0, 1.0, 1.0))


def test_spectral_bounds_small_rho_limit(rng):
    W = rng.standard_normal((4, 4))
    H = np.eye(4) + W.T @ W
    p = Problem.quadratic(H, np.zeros(4), rng.standard_normal((2, 4)), np.zeros(2))
    assert spectral_bounds(p, 1e-12).g_hi == pytest.approx(np.linalg.eigvalsh(H)[-1], rel=1e-9)


def test_spectral_bounds_rank_deficient():
    p = Problem.quadratic(np.eye(2), np.zeros(2), [[1.0, 1.0], [2.0, 2.0]], [0.0, 0.0])
    with pytest.raises(RankDeficiencyError):
        spectral_bounds(p, 0.1)
    sb = spectral_bounds(p, 0.1, strict=False)
    assert not sb.full_rank
    assert "CC' singular" in rate_bound(GainConfig(rho=0.1, k_p=0.1), sb).violations


def test_rate_bound_examples():
    sb = SpectralBounds(1.0, 2.0, 1.0, 1.0)
    r = rate_bound(GainConfig(rho=0.5, k_i=1.0, k_p=0.1), sb)
    assert r.mu == pytest.approx(0.05) and r.hypotheses_ok
    r = rate_bound(GainConfig(rho=0.5, k_i=1.0, k_p=0.0), sb)
    assert r.mu == 0.0 and not r.hypotheses_ok and "K_p not positive" in r.violations
    r = rate_bound(GainConfig(rho=0.5, k_i=1.0, k_p=1.0), sb)
    # hypotheses hold but the bound is non-informative
    assert r.mu == pytest.approx(-2.0) and r.hypotheses_ok


def test_rate_bound_hypothesis_names():
    sb = SpectralBounds(1.0, 2.0, 1.0, 4.0)
    r = rate_bound(GainConfig(rho=0.5, k_i=0.2, k_p=0.3), sb)
    assert set(r.violations) == {"rho >= 1/c_hi", "K_i < K_p"}
    r = rate_bound(GainConfig(rho=0.1, k_i=1.0, k_p=-0.7), sb)
    assert r.violations == ["K_p not positive"]


@settings(max_examples=200, deadline=None)
@given(g_lo=st.floats(0.1, 5), dg=st.floats(0, 1), c_lo=st.floats(0.1, 5), dc=st.floats(0, 1),
       k_i=st.floats(0.1, 5), k_p=st.floats(0.01, 5))
def test_rate_bound_monotone(g_lo, dg, c_lo, dc, k_i, k_p):
    g = GainConfig(rho=0.1, k_i=k_i, k_p=k_p)
    base = rate_bound(g, SpectralBounds(g_lo, 10.0, c_lo, 10.0)).mu
    assert rate_bound(g, SpectralBounds(g_lo + dg, 10.0, c_lo, 10.0)).mu >= base
    assert rate_bound(g, SpectralBounds(g_lo, 10.0, c_lo + dc, 10.0)).mu >= base


def test_scalar_mode_matrices_example():
    A1, A2 = scalar_mode_matrices(1.0, 0.5, 4.0, 1.0)
    assert np.array_equal(A1, [[-1.5, -1.0], [2.5, -1.0]])
    assert np.array_equal(A2, [[-1.0, 0.0], [-1.0, -8.0]])


def test_pdgd_special_case():
    eta = 1.0
    A1, _ = scalar_mode_matrices(2.0, 0.3, eta, 0.0)
    assert np.array_equal(A1, [[-2.3, -1.0], [eta, 0.0]])


def test_scalar_mode_eigenvalues_example():
    sm = scalar_mode_eigenvalues(1.0, 0.5, 4.0, 1.0)
    assert sm.mode1_complex
    assert sm.abscissa1 == pytest.approx(-1.25)
    assert abs(sm.mode1[0].imag) == pytest.approx(np.sqrt(9.75) / 2)
    assert sm.mode2 == (-1.0, -8.0)


def test_small_ki_limit():
    sm = scalar_mode_eigenvalues(1.0, 0.5, 1e-12, 0.3)
    assert sorted(ev.real for ev in sm.mode1) == pytest.approx([-1.8, 0.0], abs=1e-10)


def test_closed_form_matches_eigensolver():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        w, rho, k_i = rng.uniform(0.05, 5, 3)
        k_p = rng.uniform(-2, 3)
        A1, A2 = scalar_mode_matrices(w, rho, k_i, k_p)
        sm = scalar_mode_eigenvalues(w, rho, k_i, k_p)
        for A, closed in ((A1, sm.mode1), (A2, sm.mode2)):
            ref = np.sort_complex(np.linalg.eigvals(A).astype(complex))
            got = np.sort_complex(np.asarray(closed, dtype=complex))
            worst = max(worst, np.max(np.abs(ref - got)) / max(1.0, np.max(np.abs(ref))))
        assert sm.mode2 == (-w, -k_i / rho)
    assert worst <= 1e-10


def test_pdgd_best_abscissa_over_eta():
    w, rho = 1.3, 0.4
    best = min(scalar_mode_eigenvalues(w, rho, eta, 0.0).abscissa1
               for eta in np.logspace(-3, 3, 2001))
    assert best == pytest.approx(pdgd_best_abscissa(w, rho), abs=1e-12)


def test_pi_beats_pdgd_best_on_sweep():
    count = 0
    for w in np.linspace(0.2, 3, 8):
        for rho in np.linspace(0.1, 2, 6):
            for k_p in np.linspace(0.05, 2, 8):
                threshold = (k_p + w + rho) ** 2 / 4
                for k_i in threshold * np.array([1.01, 2.0, 10.0]):
                    assert compare_scalar_modes(w, rho, k_i, k_p)["beats_pdgd_best"]
                    count += 1
    assert count == 8 * 6 * 8 * 3


@pytest.mark.parametrize("k_p, verdict", [(1.0, "PI faster"), (0.0, "equal")])
def test_compare_verdicts(k_p, verdict):
    assert compare_scalar_modes(1.0, 0.5, 4.0, k_p)["verdict"] == verdict


def test_decay_slope_exact_exponential():
    t = np.linspace(0, 10, 101)
    assert decay_slope(t, 3 * np.exp(-0.7 * t)) == pytest.approx(-0.7)
    assert np.isnan(decay_slope(t, np.zeros_like(t)))
