import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emphatic.emphasis import (
    as_interest,
    beta,
    emphasis_bundle,
    emphasis_vector,
    followon_vector,
    kappa,
    plambda,
)
from emphatic.fixtures import fixture_random, fixture_two_state, two_state_closed_form
from emphatic.learners import simulate
from emphatic.mdp import ValidationError, induced_chain


def neumann_followon(d, P, gamma, terms=3000):
    """Oracle: f^T = sum_k d^T (gamma P)^k."""
    out, row = np.zeros_like(d), d.copy()
    for _ in range(terms):
        out += row
        row = gamma * row @ P
    return out


def plambda_series(P, gamma, lam, terms=400):
    """Oracle: P_lambda = (1 - lam) sum_k lam^k (gamma P)^(k+1)."""
    out = np.zeros_like(P)
    power = gamma * P
    for k in range(terms):
        out += (1 - lam) * lam**k * power
        power = power @ (gamma * P)
    return out


def test_two_state_followon_closed_form():
    for eps, gamma in [(0.1, 0.9), (0.3, 0.5), (1e-4, 0.9), (0.7, 0.99)]:
        inst = fixture_two_state(eps, gamma)
        b = emphasis_bundle(inst.mdp, inst.target, inst.behavior)
        closed = two_state_closed_form(eps, gamma)
        np.testing.assert_allclose(b.d_mu, closed["d_mu"], atol=1e-12)
        np.testing.assert_allclose(b.f, closed["f"], rtol=1e-12)


def test_two_state_frozen_values(two_state):
    b = emphasis_bundle(two_state.mdp, two_state.target, two_state.behavior)
    # f = (1.8, 8.2); kappa = min(0.9 / 1.8, 0.1 / 8.2)
    np.testing.assert_allclose(b.f, [1.8, 8.2], rtol=1e-13)
    assert b.kappa == pytest.approx(1 / 82, rel=1e-12)
    assert b.d_pi is not None
    np.testing.assert_allclose(b.d_pi, [0.1, 0.9], atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_followon_matches_neumann_series(seed):
    inst = fixture_random(seed, 6, 3, gamma=0.99)
    b = emphasis_bundle(inst.mdp, inst.target, inst.behavior)
    P = induced_chain(inst.mdp, inst.target).transition_matrix
    np.testing.assert_allclose(b.f, neumann_followon(b.d_mu, P, 0.99), rtol=1e-9)
    assert b.f.sum() == pytest.approx(1 / (1 - 0.99), rel=1e-10)


@pytest.mark.parametrize("lam", [0.0, 0.1, 0.5, 0.9])
def test_plambda_matches_series(lam):
    inst = fixture_random(2, 5, 3, gamma=0.9)
    P = induced_chain(inst.mdp, inst.target).transition_matrix
    np.testing.assert_allclose(plambda(P, 0.9, lam), plambda_series(P, 0.9, lam), atol=1e-12)


def test_plambda_at_zero_lambda_is_gamma_p():
    inst = fixture_random(0)
    P = induced_chain(inst.mdp, inst.target).transition_matrix
    np.testing.assert_allclose(plambda(P, 0.9, 0.0), 0.9 * P, atol=1e-15)


def test_beta_values():
    assert beta(0.9, 0.0) == 0.9
    assert beta(0.9, 0.5) == pytest.approx(0.45 / 0.55)
    assert beta(0.0, 0.3) == 0.0


@pytest.mark.parametrize("lam", [0.0, 0.3, 0.9])
def test_emphasis_matches_neumann_series(lam):
    inst = fixture_random(8, 5, 2, gamma=0.9)
    i = np.array([1.0, 2.0, 0.5, 1.0, 3.0])
    b = emphasis_bundle(inst.mdp, inst.target, inst.behavior, lam, i)
    oracle = neumann_followon(i * b.d_mu, b.plambda, 1.0, terms=2000)
    np.testing.assert_allclose(b.m, oracle, rtol=1e-10)
    res_f, res_m = b.residuals(induced_chain(inst.mdp, inst.target).transition_matrix)
    assert res_f < 1e-12 and res_m < 1e-12


def test_emphasis_equals_followon_at_lambda_zero():
    inst = fixture_random(5, 8, 3)
    b = emphasis_bundle(inst.mdp, inst.target, inst.behavior, 0.0)
    np.testing.assert_allclose(b.m, b.f, atol=1e-10)


def test_kappa_range_and_on_policy_value():
    for seed in range(10):
        off = fixture_random(seed, 5, 3)
        b = emphasis_bundle(off.mdp, off.target, off.behavior)
        assert 0 < b.kappa <= 1 - 0.9 + 1e-12
        on = fixture_random(seed, 5, 3, on_policy=True)
        b = emphasis_bundle(on.mdp, on.target, on.behavior)
        assert b.kappa == pytest.approx(0.1, abs=1e-12)
        np.testing.assert_allclose(b.f, b.d_mu / 0.1, rtol=1e-10)


def test_two_state_half_epsilon_is_on_policy():
    inst = fixture_two_state(0.5, 0.9)
    b = emphasis_bundle(inst.mdp, inst.target, inst.behavior)
    assert b.kappa == pytest.approx(0.1, abs=1e-12)


def test_interest_validation():
    assert as_interest(None, 3).tolist() == [1.0, 1.0, 1.0]
    with pytest.raises(ValidationError, match="positive"):
        as_interest([1.0, 0.0], 2)
    with pytest.raises(ValidationError):
        as_interest([1.0], 2)


def test_kappa_rejects_nonpositive_followon():
    with pytest.raises(ValidationError):
        kappa([0.5, 0.5], [1.0, 0.0])


def test_plambda_rejects_non_stochastic_input():
    with pytest.raises(ArithmeticError):
        plambda(np.array([[2.0, -1.0], [0.0, 1.0]]), 0.9, 0.5)


def test_explicit_solvers_agree_with_bundle():
    inst = fixture_random(9, 4, 2)
    b = emphasis_bundle(inst.mdp, inst.target, inst.behavior, 0.4)
    P = induced_chain(inst.mdp, inst.target).transition_matrix
    np.testing.assert_allclose(followon_vector(b.d_mu, P, 0.9), b.f)
    np.testing.assert_allclose(emphasis_vector(None, b.d_mu, b.plambda), b.m)


def test_expected_followon_trace_matches_f():
    # mild instance: gamma^2 E[rho^2] < 1 so F has finite variance and its
    # long-run average per state settles; E[F_t 1{S_t=s}] -> f(s)
    inst = fixture_random(21, 3, 2, min_prob=0.3, gamma=0.5)
    b = emphasis_bundle(inst.mdp, inst.target, inst.behavior)
    traj = simulate(inst.mdp, inst.behavior, inst.target, 0, 1_000_000)
    states, rhos = traj.states[:-1], traj.rhos
    F = np.empty(len(rhos))
    prev = 0.0
    for t in range(len(rhos)):
        prev = 0.5 * (rhos[t - 1] if t else 0.0) * prev + 1.0
        F[t] = prev
    est = np.bincount(states, weights=F, minlength=3) / len(F)
    np.testing.assert_allclose(est, b.f, rtol=0.02)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), lam=st.floats(0.0, 0.99), gamma=st.sampled_from([0.3, 0.9, 0.99]))
def test_plambda_rows_sum_to_beta(seed, lam, gamma):
    inst = fixture_random(seed, 6, 2, gamma=gamma)
    P = induced_chain(inst.mdp, inst.target).transition_matrix
    PL = plambda(P, gamma, lam)
    assert np.all(PL >= 0)
    np.testing.assert_allclose(PL.sum(axis=1), beta(gamma, lam), atol=1e-10)


def test_zero_discount_degenerates():
    inst = fixture_random(4, 5, 2, gamma=0.0)
    b = emphasis_bundle(inst.mdp, inst.target, inst.behavior, 0.5)
    np.testing.assert_allclose(b.f, b.d_mu, atol=1e-15)
    assert b.kappa == pytest.approx(1.0)
    assert b.beta == 0.0


def test_followon_dominates_d_mu_and_emphasis_dominates_interest():
    for seed in range(10):
        inst = fixture_random(seed, 6, 3)
        b = emphasis_bundle(inst.mdp, inst.target, inst.behavior, 0.6, np.linspace(0.5, 2.0, 6))
        assert np.all(b.f >= b.d_mu)
        assert np.all(b.m >= b.i_weighted)


def test_one_state_emphasis():
    from emphatic.mdp import Policy, TabularMdp

    mdp = TabularMdp(np.ones((1, 1, 1)), np.zeros((1, 1)), 0.9, np.ones(1))
    pol = Policy(np.ones((1, 1)))
    b = emphasis_bundle(mdp, pol, pol, 0.5)
    assert b.m[0] == pytest.approx(1 / (1 - 9 / 11))


def test_beta_limits():
    assert beta(0.9, 0.9999) < 1e-3
    lams = np.linspace(0, 0.99, 50)
    assert np.all(np.diff([beta(0.9, lam) for lam in lams]) < 0)


def test_emphasis_near_lambda_one_matches_dense_inverse():
    inst = fixture_random(1, 4, 2)
    b = emphasis_bundle(inst.mdp, inst.target, inst.behavior, 0.999)
    oracle = b.i_weighted @ np.linalg.inv(np.eye(4) - b.plambda)
    np.testing.assert_allclose(b.m, oracle, rtol=1e-12)
    # rows of P_lambda sum to beta, so m sums to sum(i * d_mu) / (1 - beta)
    assert b.m.sum() == pytest.approx(b.i_weighted.sum() / (1 - b.beta), rel=1e-12)


def test_on_policy_bundle():
    inst = fixture_random(2, 5, 3, on_policy=True)
    b = emphasis_bundle(inst.mdp, inst.target, inst.behavior)
    np.testing.assert_allclose(b.f, b.d_pi / 0.1, rtol=1e-10)
    np.testing.assert_allclose(b.m, b.f, rtol=1e-12)
    assert b.beta == 0.9
