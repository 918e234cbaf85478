"""Built-in instances: the two-state tightness MDP, seeded random MDPs and the frozen
off-policy TD(0) divergence witness."""

import hashlib
import json
import math
from importlib import resources

import numpy as np

from .emphasis import emphasis_bundle
from .mdp import Policy, TabularMdp, ValidationError, induced_chain
from .operators import td0_modulus
from .spec_io import Instance, canonical_json, spec_from_dict

LEFT, RIGHT = 0, 1


class FixtureCorruptedError(RuntimeError):
    pass


def fixture_two_state(epsilon=0.1, gamma=0.9, lam=0.0):
    """Two states, Left and Right, with actions that move there deterministically.

    The behavior policy goes Right with probability ``epsilon``; the target
    goes Left with probability ``epsilon``. Moving Right pays 1, moving Left
    pays 0.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValidationError(f"epsilon must lie in (0, 1), got {epsilon}", field="epsilon")
    if not 0.0 <= gamma < 1.0:
        raise ValidationError(f"gamma must lie in [0, 1), got {gamma}", field="gamma")
    transition = np.zeros((2, 2, 2))
    transition[LEFT, :, LEFT] = 1.0
    transition[RIGHT, :, RIGHT] = 1.0
    reward = np.array([[0.0, 1.0], [0.0, 1.0]])
    behavior = Policy(np.array([[1.0 - epsilon, epsilon]] * 2))
    target = Policy(np.array([[epsilon, 1.0 - epsilon]] * 2))
    mdp = TabularMdp(transition, reward, gamma, np.array([0.5, 0.5]))
    return Instance(
        mdp, target, behavior, np.eye(2), None, lam, "two_state",
        ("Left", "Right"), ("go_left", "go_right"),
    )


def two_state_closed_form(epsilon, gamma):
    """Closed-form quantities of the two-state example, with v = (0, 1)."""
    e, g = epsilon, gamma
    return {
        "d_mu": np.array([1.0 - e, e]),
        "P_pi": np.array([[e, 1.0 - e], [e, 1.0 - e]]),
        "f": np.array([1.0 + 2 * e * g - e - g, -2 * e * g + e + g]) / (1.0 - g),
        "v_sq_f": (e + g - 2 * e * g) / (1.0 - g),
        "Pv_sq_f": (1.0 - e) ** 2 / (1.0 - g),
    }


def _simplex_rows(rng, shape, min_prob):
    k = shape[-1]
    return min_prob + (1.0 - k * min_prob) * rng.dirichlet(np.ones(k), size=shape[:-1])


def fixture_random(seed, n_states=5, n_actions=3, min_prob=0.05, n_features=None,
                   lam=0.0, on_policy=False, gamma=0.9):
    """Seeded random instance with every transition and action probability >= min_prob.

    ``n_features=None`` gives tabular features; otherwise a Gaussian feature
    matrix with that many columns (redrawn until well conditioned).
    """
    if min_prob <= 0 or n_states * min_prob > 1 or n_actions * min_prob > 1:
        raise ValidationError(
            f"min_prob={min_prob} infeasible for {n_states} states and {n_actions} actions",
            field="min_prob",
        )
    rng = np.random.default_rng(seed)
    transition = _simplex_rows(rng, (n_actions, n_states, n_states), min_prob)
    reward = rng.uniform(-1.0, 1.0, size=(n_states, n_actions))
    initial = rng.dirichlet(np.ones(n_states))
    behavior = Policy(_simplex_rows(rng, (n_states, n_actions), min_prob))
    target = behavior if on_policy else Policy(_simplex_rows(rng, (n_states, n_actions), min_prob))
    if n_features is None:
        phi = np.eye(n_states)
    else:
        while True:
            phi = rng.normal(size=(n_states, n_features))
            sv = np.linalg.svd(phi, compute_uv=False)
            if sv[-1] > 1e-3 * sv[0]:
                break
    mdp = TabularMdp(transition, reward, gamma, initial)
    name = f"random_seed{seed}" + ("_onpolicy" if on_policy else "")
    return Instance(mdp, target, behavior, phi, None, lam, name)


def property_family(count, seed0=0, gammas=(0.5, 0.9, 0.99), min_prob=0.02):
    """The seeded instance family used by the theorem property suites.

    3-10 states, 2-4 actions, gamma cycling through ``gammas``, random
    full-rank features with ceil(|S|/2) columns.
    """
    for k in range(count):
        seed = seed0 + k
        rng = np.random.default_rng([seed, 7])
        n_states = int(rng.integers(3, 11))
        n_actions = int(rng.integers(2, 5))
        yield fixture_random(
            seed, n_states, n_actions, min_prob,
            n_features=math.ceil(n_states / 2), gamma=gammas[k % len(gammas)],
        )


def _data_text(name):
    return resources.files("emphatic").joinpath("data", name).read_text(encoding="utf-8")


def load_two_state_spec():
    """The shipped ``two_state.json`` (epsilon = 0.1, gamma = 0.9)."""
    text = _data_text("two_state.json")
    return spec_from_dict(json.loads(text), text)


def spec_hash(doc):
    body = {k: v for k, v in doc.items() if k != "meta"}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


def fixture_divergence():
    """The frozen instance on which off-policy TD(0) diverges.

    Integrity (content hash) and the defining property, an expansive
    Pi_{d_mu} T^pi in the d_mu-norm, are both re-checked on every load.
    """
    text = _data_text("divergence.json")
    doc = json.loads(text)
    meta = doc.get("meta", {})
    if spec_hash(doc) != meta.get("sha256"):
        raise FixtureCorruptedError("divergence fixture hash does not match its recorded hash")
    inst = spec_from_dict(doc, text)
    bundle = emphasis_bundle(inst.mdp, inst.target, inst.behavior, 0.0)
    chain = induced_chain(inst.mdp, inst.target)
    if not td0_modulus(bundle, chain, inst.features) > 1.0:
        raise FixtureCorruptedError("divergence fixture no longer has an expansive TD(0) operator")
    return inst


def divergence_meta():
    return json.loads(_data_text("divergence.json")).get("meta", {})


FIXTURES = ("two-state", "random", "on-policy", "divergence")
