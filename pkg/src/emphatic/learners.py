"""Behavior-policy simulation and the ETD(0), ETD(lambda) and off-policy TD(0) learners."""

import bisect
import hashlib
import itertools
import io
import json
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .emphasis import as_interest, emphasis_bundle
from .mdp import importance_ratios, induced_chain, true_value
from .operators import solve_projected_fixed_point, weighted_norm

ALGORITHMS = ("etd0", "etdlambda", "td0")
DIVERGENCE_DISTANCE = 1e3


class Transition(NamedTuple):
    state: int
    action: int
    reward: float
    next_state: int
    rho: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Arrays of length T; ``states`` has T + 1 entries (s_0 .. s_T)."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    rhos: np.ndarray
    seed: int

    def __len__(self):
        return len(self.actions)

    def __iter__(self):
        s, a, r, rho = (x.tolist() for x in (self.states, self.actions, self.rewards, self.rhos))
        for t in range(len(a)):
            yield Transition(s[t], a[t], r[t], s[t + 1], rho[t])


def _cumulative(rows):
    out = np.cumsum(rows, axis=-1)
    out[..., -1] = 1.0
    return out.tolist()


def simulate(mdp, behavior, target, seed, T):
    """Sample T transitions under ``behavior``, annotated with target/behavior ratios."""
    rho_table = importance_ratios(target, behavior)
    if T < 0:
        raise ValueError("T must be nonnegative")
    rng = np.random.default_rng(seed)
    u = rng.random(2 * T + 1).tolist()
    act_cdf = _cumulative(behavior.table)
    next_cdf = _cumulative(mdp.transition)
    s = bisect.bisect_right(_cumulative(mdp.initial_dist), u[0])
    states = [s]
    actions = []
    for t in range(T):
        a = bisect.bisect_right(act_cdf[s], u[2 * t + 1])
        s = bisect.bisect_right(next_cdf[a][s], u[2 * t + 2])
        actions.append(a)
        states.append(s)
    states = np.array(states, dtype=np.int64)
    actions = np.array(actions, dtype=np.int64)
    return Trajectory(
        states=states,
        actions=actions,
        rewards=mdp.reward[states[:-1], actions] if T else np.zeros(0),
        rhos=rho_table[states[:-1], actions] if T else np.zeros(0),
        seed=seed,
    )


@dataclass(frozen=True)
class StepSchedule:
    kind: str = "harmonic"
    alpha0: float = 0.01
    offset: float = 1000.0

    def __post_init__(self):
        if self.kind not in ("constant", "harmonic"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.alpha0 <= 0 or self.offset <= 0:
            raise ValueError("alpha0 and offset must be positive")

    def __call__(self, t):
        if self.kind == "constant":
            return self.alpha0
        return self.alpha0 * self.offset / (self.offset + t)


# Learner states. ``F`` holds the follow-on trace of the last processed step
# and ``rho_prev`` its importance ratio; both start at zero so the first step
# produces F_0 = i(S_0) from the same recursion as every later step.

@dataclass(frozen=True, eq=False)
class Etd0State:
    theta: np.ndarray
    F: float = 0.0
    rho_prev: float = 0.0
    step_count: int = 0


@dataclass(frozen=True, eq=False)
class EtdLambdaState:
    theta: np.ndarray
    e: np.ndarray
    F: float = 0.0
    M: float = 0.0
    rho_prev: float = 0.0
    step_count: int = 0


@dataclass(frozen=True, eq=False)
class Td0State:
    theta: np.ndarray
    step_count: int = 0

    @property
    def F(self):
        return 1.0


def _td_error(theta, tr, gamma, features):
    return tr.reward + gamma * (theta @ features[tr.next_state]) - theta @ features[tr.state]


def etd0_step(state, tr, alpha, gamma, features):
    F = gamma * state.rho_prev * state.F + 1.0
    phi = features[tr.state]
    delta = _td_error(state.theta, tr, gamma, features)
    # grouping mirrors etd_lambda_step so lambda=0 reproduces this bit for bit
    trace = tr.rho * (F * phi)
    theta = state.theta + (alpha * delta) * trace
    return Etd0State(theta, F, tr.rho, state.step_count + 1)


def etd_lambda_step(state, tr, alpha, gamma, lam, interest, features):
    i_t = interest[tr.state]
    F = gamma * state.rho_prev * state.F + i_t
    M = lam * i_t + (1.0 - lam) * F
    phi = features[tr.state]
    e = tr.rho * (gamma * lam * state.e + M * phi)
    delta = _td_error(state.theta, tr, gamma, features)
    theta = state.theta + (alpha * delta) * e
    return EtdLambdaState(theta, e, F, M, tr.rho, state.step_count + 1)


def td0_step(state, tr, alpha, gamma, features):
    delta = _td_error(state.theta, tr, gamma, features)
    theta = state.theta + (alpha * tr.rho * delta) * features[tr.state]
    return Td0State(theta, state.step_count + 1)


@dataclass(frozen=True)
class LearningConfig:
    algorithm: str = "etd0"
    schedule: StepSchedule = field(default_factory=StepSchedule)
    steps: int = 10_000
    seed: int = 0
    stride: int = 1000
    lam: float = 0.0
    # runs stop once ||theta|| passes this; keeps diverging runs finite
    halt_norm: float = 1e6

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.steps < 0 or self.stride < 1:
            raise ValueError("steps must be >= 0 and stride >= 1")

    def config_hash(self):
        """Hash of everything except the seed."""
        d = asdict(self)
        d.pop("seed")
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(eq=False)
class LearningCurve:
    config: LearningConfig
    config_hash: str
    steps: list
    distance: list
    theta_norm: list
    F_value: list
    theta: np.ndarray
    theta_star: np.ndarray
    V_norm: float
    max_F: float
    diverged: bool

    @property
    def final_distance(self):
        return self.distance[-1]

    def to_csv(self):
        buf = io.StringIO()
        buf.write("step,distance_m,theta_norm,F_value\n")
        for row in zip(self.steps, self.distance, self.theta_norm, self.F_value):
            buf.write("%d,%s,%s,%s\n" % (row[0], *(format(x, ".17g") for x in row[1:])))
        return buf.getvalue()

    def summary(self):
        return {
            "algorithm": self.config.algorithm,
            "config_hash": self.config_hash,
            "seed": self.config.seed,
            "steps": self.steps[-1],
            "final_distance": self.final_distance,
            "relative_distance": self.final_distance / self.V_norm if self.V_norm > 0 else None,
            "value_norm": self.V_norm,
            "max_F": self.max_F,
            "diverged": self.diverged,
            "theta": self.theta.tolist(),
            "theta_star": self.theta_star.tolist(),
        }


def run_learning(instance, config, trajectory=None):
    """Run one learner on ``instance`` and record its distance to the exact fixed point.

    Distances are ``||Phi theta_t - Phi theta*||`` in the emphatic norm of the
    algorithm (f for ETD(0) and TD(0), m for ETD(lambda)).
    """
    mdp, phi = instance.mdp, instance.features
    gamma = mdp.discount
    chain = induced_chain(mdp, instance.target)
    if config.algorithm == "etdlambda":
        lam, interest = config.lam, as_interest(instance.interest, mdp.n_states)
        bundle = emphasis_bundle(mdp, instance.target, instance.behavior, lam, interest)
        weight = bundle.m
    else:
        lam, interest = 0.0, np.ones(mdp.n_states)
        bundle = emphasis_bundle(mdp, instance.target, instance.behavior, 0.0)
        weight = bundle.f
    theta_star = solve_projected_fixed_point(phi, weight, chain, gamma, lam, bundle.plambda)
    target_v = phi @ theta_star
    V_norm = weighted_norm(true_value(chain, gamma), weight)

    if trajectory is None:
        trajectory = simulate(mdp, instance.behavior, instance.target, config.seed, config.steps)
    n = phi.shape[1]
    if config.algorithm == "etd0":
        state = Etd0State(np.zeros(n))
        step = lambda st, tr, a: etd0_step(st, tr, a, gamma, phi)  # noqa: E731
    elif config.algorithm == "etdlambda":
        state = EtdLambdaState(np.zeros(n), np.zeros(n))
        step = lambda st, tr, a: etd_lambda_step(st, tr, a, gamma, lam, interest, phi)  # noqa: E731
    else:
        state = Td0State(np.zeros(n))
        step = lambda st, tr, a: td0_step(st, tr, a, gamma, phi)  # noqa: E731

    steps, dist, norms, Fs = [], [], [], []

    def record(t, st):
        steps.append(t)
        dist.append(weighted_norm(phi @ st.theta - target_v, weight))
        norms.append(float(np.linalg.norm(st.theta)))
        Fs.append(float(st.F))

    record(0, state)
    max_F = 0.0
    halted = False
    for t, tr in enumerate(itertools.islice(trajectory, config.steps), start=1):
        state = step(state, tr, config.schedule(t - 1))
        max_F = max(max_F, state.F)
        halted = not np.linalg.norm(state.theta) < config.halt_norm
        if t % config.stride == 0 or t == config.steps or halted:
            record(t, state)
        if halted:
            break
    return LearningCurve(
        config=config,
        config_hash=config.config_hash(),
        steps=steps,
        distance=dist,
        theta_norm=norms,
        F_value=Fs,
        theta=state.theta,
        theta_star=theta_star,
        V_norm=V_norm,
        max_F=max_F,
        diverged=halted or not dist[-1] <= DIVERGENCE_DISTANCE,
    )

