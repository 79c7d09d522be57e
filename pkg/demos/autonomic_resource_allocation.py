"""Reward elicitation for the server resource-allocation domain.

Two application servers share three resource units; states pair the current
allocation with each server's demand level (10 allocations x 9 demand states
= 90 states, one action per target allocation).  Server utilities are only
known to lie in intervals, and asking a server what a specific allocation is
worth is expensive, so queries must be spent carefully.

This run is scaled down (query budget 60) to stay quick; the full experiment
lives in the acceptance suite.
"""

import time

import numpy as np

from irmdp import AutonomicSpec, ElicitationSession, SimulatedUser, gen_autonomic

spec = AutonomicSpec(servers=2, units=3, demand_levels=3, kappa=0.5, seed=11)
mdp, box, r_true = gen_autonomic(spec)
print(f"domain: {mdp.n} states, {mdp.k} actions, {mdp.n_pairs} reward parameters")
print(f"initial interval mass: {float(np.sum(box.hi - box.lo)):.1f}")

session = ElicitationSession(
    mdp,
    box,
    criterion="mmr",
    strategy="cs",
    solver_mode="relaxed",
    metric_mode="relaxed",
    tau=0.0,
    budget=60,
    user=SimulatedUser(r_true),
    solver_kwargs={"max_iterations": 25},
)

t0 = time.time()
from irmdp import simulate_response

while True:
    q = session.advance()
    snap = session.trace[-1]
    if snap.query_index % 10 == 0:
        print(f"query {snap.query_index:>3}: regret estimate {snap.max_regret:>8.3f}  "
              f"true regret {snap.true_regret:>8.3f}  chi {snap.chi:>7.1f}  "
              f"pairs touched {snap.distinct_pairs}")
    if q is None:
        break
    session.answer(simulate_response(session.user, q))

print(f"\n{len(session.query_log)} queries in {time.time()-t0:.0f}s; "
      f"touched {len(session.queried_pairs)} of {mdp.n_pairs} pairs "
      f"({len(session.queried_pairs)/mdp.n_pairs:.1%} of the reward space)")
