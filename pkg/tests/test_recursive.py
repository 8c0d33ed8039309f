import numpy as np
import pytest

from richwin.errors import SingularPivot, SNearSingular, WindowTooSmall
from richwin.linalg import frobenius_norm, gauss_solve, invert_via_ldl
from richwin.recursive import (
    D2,
    CorrectionPolicy,
    RecursiveEstimator,
    RecursiveState,
    init,
    reinitialize_on_resize,
    update_gamma,
    update_theta_form1,
    update_theta_form2,
)
from richwin.richardson import inversion_error
from richwin.window import RankTwoUpdate, WindowState, default_basis, warm_start


def well_conditioned(rng, w=160):
    return warm_start(default_basis(), w, rng.standard_normal(w))


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


# --- init ----------------------------------------------------------------------

def test_init_identity():
    st = init(np.eye(3), [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(st.Gamma, np.eye(3))
    np.testing.assert_array_equal(st.theta, [1.0, 0.0, 0.0])


def test_init_diagonal():
    st = init(np.diag([2.0, 4.0]), [2.0, 8.0])
    np.testing.assert_allclose(st.Gamma, np.diag([0.5, 0.25]))
    np.testing.assert_allclose(st.theta, [1.0, 2.0])


def test_init_harmonic_window_after_polish(rng):
    state = warm_start(default_basis(), 256, rng.standard_normal(256))
    st = init(state.A, state.b)
    assert inversion_error(state.A, st.Gamma) <= 1e-8
    assert st.init_inv_error == st.inv_error
    assert st.init_flops > 0


def test_init_propagates_singular_pivot():
    with pytest.raises(SingularPivot):
        init(np.ones((2, 2)), [1.0, 1.0])


def test_policy_validation():
    with pytest.raises(ValueError):
        CorrectionPolicy("sometimes")
    with pytest.raises(ValueError):
        CorrectionPolicy.richardson_refresh(0)
    assert CorrectionPolicy().kind == "newton_schulz"


# --- Gamma update ------------------------------------------------------------------

def test_update_cancels_when_vectors_equal(rng):
    state = well_conditioned(rng)
    st = init(state.A, state.b)
    phi = rng.standard_normal(10)
    out = update_gamma(st, RankTwoUpdate(phi, phi, np.zeros(10)))
    assert frobenius_norm(out.Gamma - st.Gamma) <= 1e-12 * frobenius_norm(st.Gamma)
    assert out.step == st.step + 1
    np.testing.assert_allclose(update_theta_form1(st, RankTwoUpdate(phi, phi, np.zeros(10))),
                               st.theta, rtol=1e-12)


def test_one_slide_matches_direct_inverse(rng):
    state = well_conditioned(rng)
    st = init(state.A, state.b)
    u = state.slide(rng.standard_normal())
    out = update_gamma(st, u)
    G = invert_via_ldl(state.A)
    assert frobenius_norm(out.Gamma - G) <= 1e-8 * frobenius_norm(G)
    assert np.array_equal(out.Gamma, out.Gamma.T)
    assert out.S.shape == (2, 2)


def test_update_dimension_mismatch():
    st = init(np.eye(3), np.zeros(3))
    with pytest.raises(ValueError):
        update_gamma(st, RankTwoUpdate(np.ones(2), np.ones(2), np.zeros(2)))


def test_s_near_singular_is_raised():
    # removing a unit vector from the identity leaves a singular matrix: det S = 0
    st = init(np.eye(2), np.zeros(2))
    u = RankTwoUpdate(np.zeros(2), np.array([1.0, 0.0]), np.zeros(2))
    with pytest.raises(SNearSingular):
        update_gamma(st, u)
    with pytest.raises(SNearSingular):
        update_theta_form1(st, u)


def test_drift_without_correction_and_repair_with_newton_schulz(rng):
    w = 160
    state = well_conditioned(rng, w)
    plain = RecursiveEstimator(state.A, state.b, CorrectionPolicy.none())
    ns = RecursiveEstimator(state.A, state.b, CorrectionPolicy.newton_schulz(1))
    e_plain, e_ns = [plain.state.inv_error], [ns.state.inv_error]
    for _ in range(w):
        u = state.slide(rng.standard_normal())
        e_plain.append(plain.step(u, state.A, state.b).inv_error)
        e_ns.append(ns.step(u, state.A, state.b).inv_error)
    e_plain = np.array(e_plain)
    # growth is a trend, not step-by-step: rounding makes single steps go either way
    assert e_plain[-1] > 10 * e_plain[0]
    assert np.corrcoef(np.arange(len(e_plain)), e_plain)[0, 1] > 0.8
    assert max(e_ns) <= 1e-8


# --- parameter forms -------------------------------------------------------------------

def test_form1_unchanged_for_null_update(rng):
    st = init(np.eye(4), np.arange(4.0))
    phi = np.array([1.0, 0.0, 0.0, 0.0])
    out = update_theta_form1(st, RankTwoUpdate(phi, phi, np.zeros(4)))
    np.testing.assert_allclose(out, st.theta, atol=1e-15)


def test_form2_examples():
    st = RecursiveState(np.eye(2), np.zeros(2))
    np.testing.assert_array_equal(update_theta_form2(st, [3.0, 4.0]), [3.0, 4.0])
    st = RecursiveState(np.diag([0.5, 0.25]), np.zeros(2))
    np.testing.assert_allclose(update_theta_form2(st, [2.0, 8.0]), [1.0, 2.0])


def test_forms_agree_with_each_other_and_gauss(rng):
    state = well_conditioned(rng)
    st = init(state.A, state.b, policy=CorrectionPolicy.none())
    for _ in range(50):
        u = state.slide(rng.standard_normal())
        theta1 = update_theta_form1(st, u)
        st = update_gamma(st, u)
        theta2 = update_theta_form2(st, state.b)
        st.theta = theta1
        direct = gauss_solve(state.A, state.b)
        assert rel(theta1, theta2) <= 1e-9
        assert rel(theta1, direct) <= 1e-7
        assert rel(theta2, direct) <= 1e-7


def test_s_is_constant_along_the_slide(rng):
    state = well_conditioned(rng)
    est = RecursiveEstimator(state.A, state.b)
    S = []
    for _ in range(100):
        u = state.slide(rng.standard_normal())
        est.step(u, state.A, state.b)
        S.append(est.state.S.copy())
    ref = S[0]
    for s in S[1:]:
        assert np.max(np.abs(s - ref)) <= 1e-8 * np.max(np.abs(ref))


def test_s_structure():
    st = init(2.0 * np.eye(2), np.zeros(2))
    u = RankTwoUpdate(np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.zeros(2))
    out = update_gamma(st, u)
    np.testing.assert_allclose(out.S, D2 + 0.5 * np.eye(2))
    # 2I + e1 e1^T - e2 e2^T = diag(3, 1)
    np.testing.assert_allclose(out.Gamma, np.diag([1 / 3, 1.0]))


# --- estimator -------------------------------------------------------------------------

def test_estimator_reinitialises_on_near_singular_s():
    est = RecursiveEstimator(np.eye(2), np.zeros(2))
    u = RankTwoUpdate(np.zeros(2), np.array([1.0, 0.0]), np.zeros(2))
    A_k = np.diag([1e-3, 1.0])  # what the caller's window holds after the (bogus) slide
    out = est.step(u, A_k, np.array([1e-3, 1.0]))
    assert out.status == "s_near_singular"
    assert est.state.reinits == 1
    np.testing.assert_allclose(out.theta, [1.0, 1.0])


def test_estimator_ceiling_triggers_reinit(rng):
    state = warm_start(default_basis(), 40, rng.standard_normal(40))
    est = RecursiveEstimator(state.A, state.b, CorrectionPolicy.none(), ceiling=1e-300)
    u = state.slide(rng.standard_normal())
    est.step(u, state.A, state.b)
    assert est.state.reinits == 1
    assert est.state.step == 1


def test_estimator_richardson_refresh(rng):
    state = well_conditioned(rng)
    est = RecursiveEstimator(state.A, state.b, CorrectionPolicy.richardson_refresh(2))
    for _ in range(4):
        u = state.slide(rng.standard_normal())
        out = est.step(u, state.A, state.b)
        assert out.status == "ok"
        assert np.linalg.norm(state.A @ out.theta - state.b) <= 1e-6 * np.linalg.norm(state.b)


# --- resize ----------------------------------------------------------------------------

def test_reinitialize_on_shrink(rng):
    y = rng.standard_normal(200)
    big = warm_start(default_basis(), 160, y[:160])
    st = init(big.A, big.b)
    small = warm_start(default_basis(), 159, y[1:160])
    out = reinitialize_on_resize(st, small)
    G = invert_via_ldl(small.A)
    assert frobenius_norm(out.Gamma - G) <= 1e-8 * frobenius_norm(G)
    assert out.reinits == 1
    assert out.init_flops > 0


def test_reinitialize_same_size_matches_init(rng):
    state = well_conditioned(rng)
    st = init(state.A, state.b)
    out = reinitialize_on_resize(st, state)
    np.testing.assert_array_equal(out.Gamma, st.Gamma)
    np.testing.assert_array_equal(out.theta, st.theta)


def test_reinitialize_below_m():
    st = init(np.eye(10), np.zeros(10))
    with pytest.raises(WindowTooSmall):
        reinitialize_on_resize(st, WindowState(default_basis(), 8))
