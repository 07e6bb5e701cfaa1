"""
Exact solution of the scheduling MDP
====================================

A single queue receives bursts of M packets with probability alpha per slot
and may send up to C packets.  Holding q packets costs q/(alpha M) in delay,
sending c packets costs c^2 in power, and lambda trades the two off.
Relative value iteration gives the optimal average reward and policy.
"""

import numpy as np

from delaypower import QueueParams, build_transition_model, evaluate_policy, relative_value_iteration
from delaypower.mdp import feasible_actions

# %%
# The two configurations of the learning-curve experiments.
for p in (QueueParams(B=10, M=5, C=4, alpha=0.4, lam=1.0), QueueParams(B=12, M=5, C=5, alpha=0.4, lam=1.0)):
    model = build_transition_model(p)
    res = relative_value_iteration(model)
    ev = evaluate_policy(model, res.policy)
    print(f"B={p.B} M={p.M} C={p.C}: gain {res.gain:.6f} after {res.iterations} sweeps")
    print(f"  policy c(q) = {res.policy}")
    print(f"  average delay D = {ev.D:.4f} slots, average power E = {ev.E:.4f}")

# %%
# q = B has no action satisfying the no-overflow bounds when B - M + C < B,
# so the model forces c = C there and counts dropped packets.
p = QueueParams(10, 5, 4, 0.4)
print("feasible actions per state:", [list(feasible_actions(p, q)) for q in range(p.B + 1)])

# %%
# The stationary distribution shows where the optimal policy spends its time.
model = build_transition_model(p)
ev = evaluate_policy(model, relative_value_iteration(model).policy)
for q, mass in enumerate(ev.stationary):
    print(f"  q={q:2d}  {mass:.4f}  {'#' * int(round(60 * mass))}")
print("states never visited from an empty queue:", np.flatnonzero(ev.stationary == 0).tolist())
