"""
Delay-power trade-off of threshold policies
===========================================

Every monotone (threshold) policy of a small queue is evaluated exactly;
the lower convex hull of the resulting (D, E) cloud is the optimal
trade-off curve, and a power budget is met by time-sharing two neighbouring
vertices.
"""

from _plotting import plt, save
from delaypower import QueueParams
from delaypower.exact import constraint_solve, policy_points, sweep_lambda, tradeoff_frontier

p = QueueParams(B=6, M=3, C=3, alpha=0.5)
policies, evals, points = policy_points(p)
frontier = tradeoff_frontier(points)
print(f"{len(policies)} monotone policies, {len(frontier)} on the frontier")
for v in frontier:
    print(f"  D={v.D:.4f}  E={v.E:.4f}  policy {policies[v.policy_id]}")

# %%
# Solving the Lagrangian problem for a range of lambda walks down the
# frontier: larger lambda buys lower power with more delay.
for pt in sweep_lambda(p, [0.0, 0.25, 0.5, 1.0, 2.0, 5.0]):
    print(f"lambda={pt.lam:<5} D={pt.evaluation.D:.4f} E={pt.evaluation.E:.4f} {pt.result.policy}")

# %%
# A power budget between two vertices is met with equality by mixing them.
mix = constraint_solve(frontier, 3.3)
print(f"E_th = 3.3: D = {mix.D:.4f} with weights {mix.weights}")

if plt is not None:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter([t.D for t in points], [t.E for t in points], s=12, c="0.6", label="monotone policies")
    ax.plot([v.D for v in frontier], [v.E for v in frontier], "o-", c="C3", label="frontier")
    ax.set_xlabel("average delay D (slots)")
    ax.set_ylabel("average power E")
    ax.legend()
    save(fig, "tradeoff.png")
