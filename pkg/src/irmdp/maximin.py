"""Maximin (security-level) baseline: max over policies of the worst-case
expected value over the feasible reward set.

For a pure box the inner minimum sits at the componentwise lower bounds, so
one standard dual LP suffices.  With general linear rows the inner minimum is
dualized and the result solved jointly over the policy and the multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import LinearProgram, solve_lp
from .mdp import Mdp, flow_matrix, solve_dual_lp
from .rewards import RewardPolytope


@dataclass
class MaximinSolution:
    f: np.ndarray
    security_value: float
    worst_case_reward: np.ndarray


def worst_case_value(R: RewardPolytope, f) -> float:
    """min_r r . f over the polytope (the policy's security level)."""
    f = np.asarray(f, dtype=float).reshape(-1)
    if R.is_box():
        return float(R.lo.reshape(-1) @ f)
    sol = solve_lp(R._feasibility_lp(-f))
    if not sol.optimal:
        raise ValueError("reward polytope is empty")
    return -sol.value


def worst_case_reward(R: RewardPolytope, f) -> np.ndarray:
    """argmin_r r . f over the polytope."""
    f = np.asarray(f, dtype=float).reshape(-1)
    if R.is_box():
        return R.lo.reshape(-1).copy()
    sol = solve_lp(R._feasibility_lp(-f))
    if not sol.optimal:
        raise ValueError("reward polytope is empty")
    return sol.x


def maximin(mdp: Mdp, R: RewardPolytope, force_general: bool = False) -> MaximinSolution:
    """Maximin policy and security value over the feasible reward set.

    ``force_general`` routes a pure box through the general dualized LP
    (used to cross-check the fast path).
    """
    if R.is_box() and not force_general:
        r_lo = R.lo.reshape(-1)
        f, value = solve_dual_lp(mdp, r_lo)
        return MaximinSolution(f=f, security_value=value, worst_case_reward=r_lo.copy())

    # Inner problem: min_r r.f  s.t.  C r <= d,  lo <= r <= hi.  Its dual:
    #   max  -d.lam + lo.mu - hi.nu   s.t.  -C^T lam + mu - nu = f,  all >= 0.
    # Joining with the outer max over occupancies gives one LP in
    # x = [f (nk), lam (c), mu (nk), nu (nk)].
    nk = mdp.n_pairs
    crows, crhs = R.constraint_rows()
    c = crows.shape[0]
    lo = R.lo.reshape(-1)
    hi = R.hi.reshape(-1)

    A_flow = flow_matrix(mdp)
    flow_block = np.concatenate([A_flow, np.zeros((mdp.n, c + 2 * nk))], axis=1)
    link = np.concatenate([np.eye(nk), crows.T, -np.eye(nk), np.eye(nk)], axis=1)
    lp = LinearProgram(
        objective=np.concatenate([np.zeros(nk), -crhs, lo, -hi]),
        a=np.vstack([flow_block, link]),
        relations=("=",) * (mdp.n + nk),
        rhs=np.concatenate([mdp.alpha, np.zeros(nk)]),
        lo=np.zeros(nk + c + 2 * nk),
        hi=np.full(nk + c + 2 * nk, np.inf),
    )
    sol = solve_lp(lp)
    if not sol.optimal:
        raise ValueError(f"maximin LP {sol.status}: polytope empty?")
    f = sol.x[:nk]
    return MaximinSolution(
        f=f, security_value=float(sol.value), worst_case_reward=worst_case_reward(R, f)
    )
