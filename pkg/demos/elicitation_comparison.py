"""The four elicitation procedures on one random MDP.

Pairs each robust criterion (minimax regret / maximin) with each query
strategy (current solution / halve largest gap) and runs the bound-query loop
against the same simulated user.  Watch the CS column: regret collapses while
most reward intervals are never touched.
"""

import numpy as np

from irmdp import (
    ElicitationSession,
    RandomMdpSpec,
    SimulatedUser,
    gen_random,
    run_elicitation,
)

mdp, box, r_true = gen_random(RandomMdpSpec(n=10, k=5, seed=7))
budget = 80

results = {}
for criterion, strategy in [("mmr", "cs"), ("mmr", "hlg"), ("maximin", "cs"), ("maximin", "hlg")]:
    name = f"{'MMR' if criterion == 'mmr' else 'MM'}-{strategy.upper()}"
    session = ElicitationSession(
        mdp,
        box,
        criterion=criterion,
        strategy=strategy,
        solver_mode="relaxed",
        metric_mode="exact",
        tau_fraction=0.01,
        budget=budget,
        user=SimulatedUser(r_true),
    )
    trace, _ = run_elicitation(session)
    results[name] = (trace, session)
    print(f"{name}: stopped after {len(session.query_log)} queries ({session.terminated})")

print(f"\n{'procedure':>9} {'queries':>8} {'max regret':>11} {'true regret':>12} "
      f"{'chi left':>9} {'pairs touched':>14}")
for name, (trace, session) in results.items():
    last = trace[-1]
    chi_ratio = last.chi / trace[0].chi
    print(f"{name:>9} {len(session.query_log):>8} {last.max_regret:>11.4f} "
          f"{last.true_regret:>12.4f} {chi_ratio:>9.1%} "
          f"{len(session.queried_pairs):>6}/{mdp.n_pairs}")

print("\nMMR-CS certifies near-zero regret while leaving most of the reward")
print("space unexplored; maximin keeps querying without closing the regret gap.")
