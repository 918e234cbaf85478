import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emphatic.fixtures import fixture_random
from emphatic.mdp import (
    CoverageError,
    DimensionError,
    NonErgodicChainError,
    Policy,
    StochasticityError,
    TabularMdp,
    ValidationError,
    as_features,
    check_ergodic,
    importance_ratios,
    induced_chain,
    stationary_distribution,
    true_value,
)


def left_eigvec(P):
    """Oracle: normalized left eigenvector of eigenvalue 1."""
    w, vecs = np.linalg.eig(P.T)
    v = np.real(vecs[:, np.argmin(np.abs(w - 1.0))])
    return v / v.sum()


def test_two_state_chain_has_closed_form_stationary_distribution():
    a, b = 0.3, 0.1
    P = np.array([[1 - a, a], [b, 1 - b]])
    np.testing.assert_allclose(stationary_distribution(P), [b / (a + b), a / (a + b)], atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_stationary_distribution_matches_eigenvector(seed):
    inst = fixture_random(seed, 7, 3, 0.02)
    chain = induced_chain(inst.mdp, inst.behavior)
    d = stationary_distribution(chain)
    np.testing.assert_allclose(d, left_eigvec(chain.transition_matrix), atol=1e-10)
    np.testing.assert_allclose(d @ chain.transition_matrix, d, atol=1e-12)


def test_periodic_chain_is_rejected():
    with pytest.raises(NonErgodicChainError, match="periodic"):
        stationary_distribution(np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_reducible_chain_is_rejected():
    with pytest.raises(NonErgodicChainError, match="multiplicity 2"):
        check_ergodic(np.eye(2))


def test_transient_states_still_have_a_stationary_distribution():
    P = np.array([[0.5, 0.5], [0.0, 1.0]])
    np.testing.assert_allclose(stationary_distribution(P), [0.0, 1.0], atol=1e-12)


def test_induced_chain_rows_are_stochastic():
    inst = fixture_random(1, 6, 4)
    chain = induced_chain(inst.mdp, inst.target)
    np.testing.assert_allclose(chain.transition_matrix.sum(axis=1), 1.0, atol=1e-14)
    R = np.sum(inst.target.table * inst.mdp.reward, axis=1)
    np.testing.assert_allclose(chain.reward_vector, R)


def test_induced_chain_of_two_state_example(two_state):
    chain = induced_chain(two_state.mdp, two_state.target)
    np.testing.assert_array_equal(chain.transition_matrix, [[0.1, 0.9], [0.1, 0.9]])
    np.testing.assert_array_equal(chain.reward_vector, [0.9, 0.9])


def test_true_value_matches_neumann_series():
    inst = fixture_random(4, 5, 2, gamma=0.7)
    chain = induced_chain(inst.mdp, inst.target)
    P, R = chain.transition_matrix, chain.reward_vector
    v, term = np.zeros(5), R.copy()
    for _ in range(200):
        v += term
        term = 0.7 * P @ term
    np.testing.assert_allclose(true_value(chain, 0.7), v, atol=1e-12)


def test_two_state_value_is_nine(two_state):
    # reward 0.9 per step under the target, forever: 0.9 / (1 - 0.9)
    V = true_value(induced_chain(two_state.mdp, two_state.target), 0.9)
    np.testing.assert_allclose(V, [9.0, 9.0], atol=1e-12)


def test_trivial_one_state_mdp():
    mdp = TabularMdp(np.ones((1, 1, 1)), np.array([[2.0]]), 0.5, np.array([1.0]))
    chain = induced_chain(mdp, Policy(np.ones((1, 1))))
    assert stationary_distribution(chain).tolist() == [1.0]
    assert true_value(chain, 0.5).tolist() == [4.0]


def test_row_not_summing_to_one_names_the_row():
    P = np.array([[[1.0, 0.0], [0.5, 0.4]]])
    with pytest.raises(StochasticityError, match=r"row \(0, 1\) sums to 0.9"):
        TabularMdp(P, np.zeros((2, 1)), 0.9, np.array([0.5, 0.5]))


def test_negative_probability_rejected():
    with pytest.raises(StochasticityError, match="negative"):
        Policy(np.array([[1.5, -0.5]]))


@pytest.mark.parametrize("gamma", [1.0, -0.1, 1.5])
def test_discount_out_of_range(gamma):
    with pytest.raises(ValidationError, match="discount"):
        TabularMdp(np.ones((1, 1, 1)), np.zeros((1, 1)), gamma, np.ones(1))


def test_reward_shape_mismatch():
    with pytest.raises(DimensionError) as info:
        TabularMdp(np.ones((1, 1, 1)), np.zeros((2, 1)), 0.5, np.ones(1))
    assert info.value.code == "dimension"
    assert info.value.field == "reward"


def test_probabilities_are_stored_as_given():
    # no silent renormalization: what goes in comes back bit for bit
    t = np.array([[0.1, 0.2, 0.7], [1 / 3, 1 / 3, 1 / 3]])
    assert np.array_equal(Policy(t).table, t)


def test_importance_ratios():
    pi = Policy(np.array([[0.5, 0.5, 0.0], [1.0, 0.0, 0.0]]))
    mu = Policy(np.array([[0.25, 0.25, 0.5], [0.5, 0.0, 0.5]]))
    np.testing.assert_array_equal(importance_ratios(pi, mu), [[2.0, 2.0, 0.0], [2.0, 0.0, 0.0]])


def test_coverage_violation():
    pi = Policy(np.array([[0.5, 0.5]]))
    mu = Policy(np.array([[1.0, 0.0]]))
    with pytest.raises(CoverageError) as info:
        importance_ratios(pi, mu)
    assert (info.value.state, info.value.action, info.value.code) == (0, 1, "coverage")


def test_rank_deficient_features():
    with pytest.raises(ValidationError, match="singular value"):
        as_features([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])


def test_more_features_than_states():
    with pytest.raises(DimensionError):
        as_features(np.ones((2, 3)))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 8))
def test_stationary_distribution_property(seed, n):
    rng = np.random.default_rng(seed)
    P = 0.01 + rng.dirichlet(np.ones(n), size=n)
    P /= P.sum(axis=1, keepdims=True)
    d = stationary_distribution(P)
    assert np.all(d > 0)
    assert abs(d.sum() - 1) < 1e-12
    np.testing.assert_allclose(d, left_eigvec(P), atol=1e-9)


def test_single_action_chain_is_that_action():
    inst = fixture_random(6, 4, 1)
    chain = induced_chain(inst.mdp, inst.target)
    assert np.array_equal(chain.transition_matrix, inst.mdp.transition[0])


def test_induced_chain_matches_double_loop():
    inst = fixture_random(7, 4, 3)
    uniform = Policy(np.full((4, 3), 1 / 3))
    P = np.zeros((4, 4))
    R = np.zeros(4)
    for s in range(4):
        for a in range(3):
            R[s] += uniform.table[s, a] * inst.mdp.reward[s, a]
            for s2 in range(4):
                P[s, s2] += uniform.table[s, a] * inst.mdp.transition[a, s, s2]
    chain = induced_chain(inst.mdp, uniform)
    np.testing.assert_allclose(chain.transition_matrix, P, atol=1e-15)
    np.testing.assert_allclose(chain.reward_vector, R, atol=1e-15)


def test_two_state_behavior_distribution(two_state):
    d = stationary_distribution(induced_chain(two_state.mdp, two_state.behavior))
    np.testing.assert_allclose(d, [0.9, 0.1], atol=1e-12)


def test_constant_reward_value():
    inst = fixture_random(2, 5, 2)
    mdp = TabularMdp(inst.mdp.transition, np.ones((5, 2)), 0.8, inst.mdp.initial_dist)
    np.testing.assert_allclose(true_value(induced_chain(mdp, inst.target), 0.8), 5.0, rtol=1e-13)


def test_ratios_average_to_one_under_behavior():
    inst = fixture_random(3, 5, 4)
    rho = importance_ratios(inst.target, inst.behavior)
    np.testing.assert_allclose(np.sum(inst.behavior.table * rho, axis=1), 1.0, atol=1e-14)
    assert np.all(importance_ratios(inst.behavior, inst.behavior) == 1.0)


def test_two_state_ratio(two_state):
    rho = importance_ratios(two_state.target, two_state.behavior)
    assert rho[0, 1] == 0.9 / 0.1 and rho[0, 0] == 0.1 / 0.9


def test_deterministic_target_uniform_behavior():
    pi = Policy(np.array([[0.0, 1.0, 0.0]]))
    mu = Policy(np.full((1, 3), 1 / 3))
    assert importance_ratios(pi, mu)[0, 1] == pytest.approx(3.0)
