"""
How the optimal policy reacts to lambda and to the arrival rate
===============================================================

Heavier traffic pushes the optimal service rate up in every state and the
optimal average reward down.  Raising lambda does the opposite to power.
"""

from _plotting import plt, save
from delaypower import QueueParams
from delaypower.exact import sweep_lambda
from delaypower.sim import alpha_sweep, policy_nondecreasing_in_alpha

base = QueueParams(B=10, M=5, C=4, alpha=0.4, lam=1.0)

# %%
# lambda sweep at fixed traffic
for pt in sweep_lambda(base, [0, 0.5, 1, 2, 5]):
    print(f"lambda={pt.lam:<4} gain={pt.result.gain:9.4f} D={pt.evaluation.D:.3f} "
          f"E={pt.evaluation.E:.3f} policy={pt.result.policy}")

# %%
# alpha sweep, exact part only (pass kind and T to also train a learner)
points = alpha_sweep(base, [0.3, 0.4, 0.5, 0.6, 0.7], kind=None)
for pt in points:
    print(f"alpha={pt.alpha}: gain {pt.exact_gain:9.4f} policy {pt.exact_policy}")
print("service rates nondecreasing in alpha:", policy_nondecreasing_in_alpha(points))

if plt is not None:
    fig, ax = plt.subplots(figsize=(5, 4))
    for pt in points:
        ax.step(range(base.B + 1), pt.exact_policy, where="mid", label=f"alpha={pt.alpha}")
    ax.set_xlabel("queue length q")
    ax.set_ylabel("optimal service rate c(q)")
    ax.legend()
    save(fig, "alpha_policies.png")
