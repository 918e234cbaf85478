"""Finite MDPs, policies and the Markov chains they induce.

Arrays follow a fixed layout throughout the package:

* ``transition[a, s, s']`` is P(s'|s, a)
* ``reward[s, a]`` is R(s, a)
* policies are ``table[s, a]``
* features are ``phi[s, k]`` (one row per state)
"""

from dataclasses import dataclass

import numpy as np

PROB_ATOL = 1e-12


class ValidationError(ValueError):
    """Malformed model input. ``code`` names the kind of failure."""

    code = "invalid"

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DimensionError(ValidationError):
    code = "dimension"


class StochasticityError(ValidationError):
    code = "stochasticity"


class CoverageError(ValidationError):
    code = "coverage"

    def __init__(self, state, action, field=None):
        super().__init__(
            f"target takes action {action} in state {state} but behavior never does",
            field=field,
        )
        self.state = state
        self.action = action


class NonErgodicChainError(RuntimeError):
    pass


def _as_distribution(x, what, axis=-1):
    """Check rows of ``x`` are probability vectors (to within PROB_ATOL)."""
    x = np.array(x, dtype=float)
    if np.any(~np.isfinite(x)):
        raise StochasticityError(f"{what} has non-finite entries", field=what)
    if np.any(x < 0):
        idx = tuple(int(i) for i in np.argwhere(x < 0)[0])
        raise StochasticityError(f"{what} has a negative entry at {idx}", field=what)
    sums = x.sum(axis=axis, keepdims=True)
    bad = np.abs(sums - 1.0) > PROB_ATOL
    if np.any(bad):
        first = tuple(int(i) for i in np.argwhere(bad)[0])
        total = float(sums[first])
        idx = first[:-1]
        where = f" row {idx}" if idx else ""
        raise StochasticityError(f"{what}{where} sums to {total!r}, not 1", field=what)
    return x


@dataclass(frozen=True, eq=False)
class TabularMdp:
    transition: np.ndarray
    reward: np.ndarray
    discount: float
    initial_dist: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=float)
        if P.ndim != 3 or P.shape[1] != P.shape[2] or P.shape[0] == 0 or P.shape[1] == 0:
            raise DimensionError(
                f"transition must have shape (actions, states, states), got {P.shape}",
                field="transition",
            )
        n_actions, n_states, _ = P.shape
        R = np.asarray(self.reward, dtype=float)
        if R.shape != (n_states, n_actions):
            raise DimensionError(
                f"reward must have shape ({n_states}, {n_actions}), got {R.shape}",
                field="reward",
            )
        if not np.all(np.isfinite(R)):
            raise ValidationError("reward has non-finite entries", field="reward")
        gamma = float(self.discount)
        if not 0.0 <= gamma < 1.0:
            raise ValidationError(f"discount must lie in [0, 1), got {gamma}", field="gamma")
        rho = np.asarray(self.initial_dist, dtype=float)
        if rho.shape != (n_states,):
            raise DimensionError(
                f"initial_dist must have length {n_states}, got shape {rho.shape}",
                field="initial_dist",
            )
        P = _as_distribution(P, "transition")
        rho = _as_distribution(rho, "initial_dist")
        for name, value in [("transition", P), ("reward", R), ("initial_dist", rho)]:
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "discount", gamma)

    @property
    def n_states(self):
        return self.transition.shape[1]

    @property
    def n_actions(self):
        return self.transition.shape[0]


@dataclass(frozen=True, eq=False)
class Policy:
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim != 2 or 0 in t.shape:
            raise DimensionError(f"policy table must be (states, actions), got {t.shape}")
        t = _as_distribution(t, "policy")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def n_states(self):
        return self.table.shape[0]

    @property
    def n_actions(self):
        return self.table.shape[1]


@dataclass(frozen=True, eq=False)
class InducedChain:
    transition_matrix: np.ndarray
    reward_vector: np.ndarray

    @property
    def n_states(self):
        return self.transition_matrix.shape[0]


def as_features(phi):
    """Validate a feature matrix with one row per state."""
    phi = np.array(phi, dtype=float)
    if phi.ndim != 2 or 0 in phi.shape:
        raise DimensionError(f"features must be a 2-d (states, n) array, got {phi.shape}", field="features")
    if phi.shape[1] > phi.shape[0]:
        raise DimensionError(
            f"more features ({phi.shape[1]}) than states ({phi.shape[0]})", field="features"
        )
    smallest = np.linalg.svd(phi, compute_uv=False)[-1]
    if smallest <= 1e-10:
        raise ValidationError(
            f"features are rank deficient (smallest singular value {smallest:.3e})",
            field="features",
        )
    phi.setflags(write=False)
    return phi


def induced_chain(mdp, pol):
    if pol.table.shape != (mdp.n_states, mdp.n_actions):
        raise DimensionError(
            f"policy shape {pol.table.shape} does not match MDP "
            f"({mdp.n_states} states, {mdp.n_actions} actions)"
        )
    P = np.einsum("sa,ast->st", pol.table, mdp.transition)
    R = np.einsum("sa,sa->s", pol.table, mdp.reward)
    return InducedChain(P, R)


def check_ergodic(P, atol=1e-8):
    """Raise unless ``P`` has a single recurrent class that is aperiodic."""
    eig = np.linalg.eigvals(P)
    near_one = np.abs(eig - 1.0) < atol
    if near_one.sum() != 1:
        raise NonErgodicChainError(
            f"eigenvalue 1 has multiplicity {int(near_one.sum())}; stationary distribution is not unique"
        )
    on_circle = (np.abs(eig) > 1.0 - atol) & ~near_one
    if np.any(on_circle):
        raise NonErgodicChainError("chain is periodic; power iteration cannot converge")


def stationary_distribution(chain, tol=1e-12, max_iter=10**6):
    """Stationary distribution of an ergodic chain by power iteration.

    ``chain`` may also be a bare transition matrix.
    """
    P = getattr(chain, "transition_matrix", chain)
    P = np.asarray(P, dtype=float)
    check_ergodic(P)
    n = P.shape[0]
    d = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = d @ P
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - d)) <= tol:
            d = nxt
            break
        d = nxt
    else:
        raise NonErgodicChainError(f"power iteration did not converge in {max_iter} iterations")
    d = np.clip(d, 0.0, None)
    return d / d.sum()


def true_value(chain, gamma):
    P, R = chain.transition_matrix, chain.reward_vector
    return np.linalg.solve(np.eye(len(R)) - gamma * P, R)


def importance_ratios(target, behavior):
    """Table of pi(a|s) / mu(a|s); zero where neither policy acts."""
    pi, mu = target.table, behavior.table
    if pi.shape != mu.shape:
        raise DimensionError(f"policy shapes differ: {pi.shape} vs {mu.shape}")
    uncovered = (pi > 0) & (mu == 0)
    if np.any(uncovered):
        s, a = (int(i) for i in np.argwhere(uncovered)[0])
        raise CoverageError(s, a)
    rho = np.zeros_like(pi)
    np.divide(pi, mu, out=rho, where=mu > 0)
    return rho
