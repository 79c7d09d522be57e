"""Minimax regret on a hand-built two-action MDP.

A single state with two self-loop actions and reward intervals [0,1] x [0,1]:
each action could be worth anything, so any deterministic choice can be
regretted by 20 (the discounted horizon).  Hedging equally caps the loss at
10, and constraint generation finds exactly that policy.
"""

import numpy as np

from irmdp import Mdp, RewardPolytope, maximin, minimax_regret

mdp = Mdp(1, 2, [[[(0, 1.0)], [(0, 1.0)]]], gamma=0.95, alpha=[1.0])
box = RewardPolytope(np.zeros((1, 2)), np.ones((1, 2)))

sol = minimax_regret(mdp, box, mode="exact")
print(f"minimax regret: {sol.delta:.4f}")
print(f"policy occupancies: {np.round(sol.f, 3)} (stochastic hedge)")
print(f"witness reward: {np.round(sol.witness.r, 3)}")
print()

print("constraint generation trace (master rises, subproblem falls):")
print(f"{'iter':>4} {'master':>10} {'subproblem':>12} {'ms':>8}")
for e in sol.trace:
    print(f"{e.iteration:>4} {e.master_value:>10.4f} {e.subproblem_value:>12.4f} {e.elapsed_ms:>8.1f}")
print()

# Maximin on the same instance is uninformative: the worst case of every
# policy is reward zero everywhere, so it cannot distinguish any policies.
mm = maximin(mdp, box)
print(f"maximin security value: {mm.security_value:.4f} (same for every policy)")
print("minimax regret separates policies where maximin cannot.")
