# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # ETD(0) against off-policy TD(0)
#
# The divergence witness is a small frozen instance on which the projected
# TD(0) operator expands in the d_mu-norm. We run both learners on one shared
# trajectory with a constant step size and watch ||theta||.

# %%
import numpy as np

from emphatic import LearningConfig, StepSchedule, emphasis_bundle, fixture_divergence, induced_chain
from emphatic import run_learning, simulate
from emphatic.fixtures import divergence_meta
from emphatic.operators import td0_modulus, theorem1_report

inst = fixture_divergence()
meta = divergence_meta()
b = emphasis_bundle(inst.mdp, inst.target, inst.behavior)
chain = induced_chain(inst.mdp, inst.target)
print("TD(0) operator modulus:", td0_modulus(b, chain, inst.features))
print("ETD(0) bound          :", theorem1_report(b, chain, inst.features).bound)

# %%
traj = simulate(inst.mdp, inst.behavior, inst.target, meta["learner_seed"], 100_000)
sched = StepSchedule("constant", 0.01)
curves = {
    alg: run_learning(inst, LearningConfig(alg, sched, 100_000, meta["learner_seed"], stride=10_000), traj)
    for alg in ("td0", "etd0")
}
td = dict(zip(curves["td0"].steps, curves["td0"].theta_norm))
print(f"{'step':>7} {'TD(0) |theta|':>15} {'ETD(0) |theta|':>15}")
for step, etd in zip(curves["etd0"].steps, curves["etd0"].theta_norm):
    print(f"{step:>7} {td.get(step, float('nan')):>15.4g} {etd:>15.4g}")
print("TD(0) halted at step", curves["td0"].steps[-1])

# %% [markdown]
# TD(0) grows geometrically and is halted once ||theta|| passes 1e6;
# ETD(0) stays near its fixed point.
#
# ## Convergence on the two-state example
#
# With a harmonic step size, ETD(0) approaches the exact projected fixed
# point. The follow-on trace F has infinite variance here
# (gamma^2 E[rho^2] > 1), which is why the step size starts small.

# %%
from emphatic import fixture_two_state

two = fixture_two_state(0.1, 0.9)
for seed in range(3):
    c = run_learning(two, LearningConfig("etd0", StepSchedule("harmonic"), 200_000, seed, stride=50_000))
    print(seed, np.round(np.array(c.distance) / c.V_norm, 4), "max F", round(c.max_F, 1))
