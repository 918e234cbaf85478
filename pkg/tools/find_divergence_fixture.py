"""Seeded search for an instance on which off-policy TD(0) diverges but ETD(0) does not.

Writes src/emphatic/data/divergence.json. Run once; the result is frozen data and
``fixture_divergence`` re-verifies it on every load.

    python tools/find_divergence_fixture.py [--start 0] [--tries 5000]

An accepted candidate satisfies all of:

* Pi_{d_mu} T^pi is expansive in the d_mu-norm (exact modulus > 1);
* the mean TD(0) update matrix Phi^T D_mu (gamma P_pi - I) Phi has an
  eigenvalue with real part above ``--growth`` (so divergence is fast);
* rewards put V^pi in the feature span (see ``candidate``);
* on the shipped learner seed, constant alpha = 0.01 drives ||theta|| past 1e3
  for TD(0) within 1e5 steps while ETD(0) keeps ||theta|| < 1e2 throughout.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from emphatic.emphasis import emphasis_bundle
from emphatic.fixtures import spec_hash
from emphatic.learners import Etd0State, Td0State, etd0_step, simulate, td0_step
from emphatic.mdp import Policy, TabularMdp, importance_ratios, induced_chain
from emphatic.operators import td0_modulus
from emphatic.spec_io import Instance, canonical_json

OUT = Path(__file__).resolve().parents[1] / "src" / "emphatic" / "data" / "divergence.json"
ALPHA = 0.01
STEPS = 100_000
LEARNER_SEED = 2015


def candidate(seed):
    """Deterministic transitions and rewards R(s, a) = V(s) - gamma V(next(s, a)).

    With V = features @ theta_true this makes V the value of every policy and
    the per-transition TD error zero at theta_true, so off-policy TD(0) can only
    drift away through its unstable mean dynamics.
    """
    rng = np.random.default_rng(seed)
    n_states = int(rng.integers(2, 7))
    n_actions = int(rng.integers(2, 4))
    n_features = 1 if n_states < 4 else int(rng.integers(1, 3))
    gamma = float(rng.choice([0.8, 0.9, 0.95, 0.99]))
    nxt = rng.integers(0, n_states, size=(n_states, n_actions))
    transition = np.zeros((n_actions, n_states, n_states))
    for s in range(n_states):
        for a in range(n_actions):
            transition[a, s, nxt[s, a]] = 1.0
    phi = np.round(rng.uniform(-2.0, 2.0, size=(n_states, n_features)), 1)
    theta_true = np.round(rng.uniform(-1.0, 1.0, size=n_features), 1)
    V = phi @ theta_true
    reward = V[:, None] - gamma * V[nxt]
    behavior = np.round(rng.dirichlet(2.0 * np.ones(n_actions), size=n_states), 2)
    behavior[:, -1] = 1.0 - behavior[:, :-1].sum(axis=1)
    target = np.round(rng.dirichlet(0.5 * np.ones(n_actions), size=n_states), 2)
    target[:, -1] = 1.0 - target[:, :-1].sum(axis=1)
    if np.any(behavior <= 0) or np.any(target < 0):
        raise ValueError("rounding left an invalid policy")
    mdp = TabularMdp(transition, reward, gamma, np.full(n_states, 1.0 / n_states))
    return Instance(mdp, Policy(target), Policy(behavior), phi, None, 0.0, "td0_divergence")


def static_checks(inst, growth):
    bundle = emphasis_bundle(inst.mdp, inst.target, inst.behavior)
    chain = induced_chain(inst.mdp, inst.target)
    modulus = td0_modulus(bundle, chain, inst.features)
    if modulus <= 1.0:
        return None
    phi, g = inst.features, inst.gamma
    A = phi.T @ (bundle.d_mu[:, None] * (g * chain.transition_matrix - np.eye(len(phi)))) @ phi
    rate = float(np.max(np.linalg.eigvals(A).real))
    if rate < growth:
        return None
    rho = importance_ratios(inst.target, inst.behavior)
    # >= 1 means the follow-on trace has unbounded variance; recorded, not filtered
    second = g * g * np.max(np.sum(inst.behavior.table * rho**2, axis=1))
    return {"td0_modulus": modulus, "td0_growth_rate": rate, "followon_second_moment": float(second)}


def run_pair(inst):
    traj = simulate(inst.mdp, inst.behavior, inst.target, LEARNER_SEED, STEPS)
    phi, g = inst.features, inst.gamma
    td = Td0State(np.zeros(phi.shape[1]))
    etd = Etd0State(np.zeros(phi.shape[1]))
    td_hit, etd_max = None, 0.0
    for t, tr in enumerate(traj, start=1):
        if td_hit is None:
            td = td0_step(td, tr, ALPHA, g, phi)
            if np.linalg.norm(td.theta) > 1e3:
                td_hit = t
        etd = etd0_step(etd, tr, ALPHA, g, phi)
        etd_max = max(etd_max, float(np.linalg.norm(etd.theta)))
        if etd_max >= 1e2:
            return None
    if td_hit is None:
        return None
    return {"td0_steps_to_1e3": td_hit, "etd0_max_theta_norm": etd_max}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--start", type=int, default=0)
    ap.add_argument("--tries", type=int, default=5000)
    ap.add_argument("--growth", type=float, default=0.02)
    args = ap.parse_args()
    for seed in range(args.start, args.start + args.tries):
        try:
            inst = candidate(seed)
            stats = static_checks(inst, args.growth)
        except Exception:
            continue
        if stats is None:
            continue
        sim = run_pair(inst)
        print(f"seed {seed}: {stats} -> {sim}")
        if sim is None:
            continue
        doc = inst.to_dict()
        doc["meta"] = {
            "search_seed": seed,
            "learner_seed": LEARNER_SEED,
            "alpha": ALPHA,
            "steps": STEPS,
            **stats,
            **sim,
        }
        doc["meta"]["sha256"] = spec_hash(doc)
        OUT.write_text(canonical_json(doc) + "\n", encoding="utf-8")
        print(f"wrote {OUT}")
        return
    raise SystemExit("no candidate found")


if __name__ == "__main__":
    main()
