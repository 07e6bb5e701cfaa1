"""
Learning the schedule: Q-greedyUCB against the baselines
========================================================

Three tabular agents learn from a simulated queue that starts empty.  The
exact gain g* from relative value iteration gives the regret
t g* - sum of rewards.  Set DEMO_T to change the horizon (default 10^6;
the long-run experiments use 10^7, about a second per run).
"""

import os

import numpy as np

from _plotting import plt, save
from delaypower import LearnerConfig, QueueParams
from delaypower.sim import multi_seed_compare

p = QueueParams(B=10, M=5, C=4, alpha=0.4, lam=1.0)
T = int(float(os.environ.get("DEMO_T", "1e6")))
seeds = range(5)

# %%
rows, summary, runs = multi_seed_compare(p, ["qgreedyucb", "qlearning", "arl"], LearnerConfig(), T, seeds,
                                         keep_runs=True)
for kind, s in summary.items():
    print(f"{kind:11s} mean avg reward {s['mean_final_avg_reward']:.4f}  "
          f"mean regret {s['mean_final_regret']:10.1f}  exact policy in {s['final_matches']}/{len(seeds)} seeds")

# %%
# Where a learner disagrees with the exact policy it is usually in a state
# the optimal policy rarely or never visits, where the Q-values are nearly tied.
some = runs[("qgreedyucb", 0)]
print("visits per state (seed 0):", some.visit_histogram.sum(axis=1).tolist())

if plt is not None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for kind in summary:
        r = runs[(kind, 0)]
        ax1.semilogx(r.t, r.avg_reward, label=kind)
        ax2.semilogx(r.t, np.mean([runs[(kind, s)].regret for s in seeds], axis=0), label=kind)
    ax1.axhline(some.g_star, c="k", ls="--", label="exact gain")
    ax1.set_ylim(some.g_star * 1.3, some.g_star * 0.9)
    ax1.set_xlabel("slot t")
    ax1.set_ylabel("running average reward")
    ax2.set_xlabel("slot t")
    ax2.set_ylabel("mean regret")
    ax1.legend()
    save(fig, "learning.png")
