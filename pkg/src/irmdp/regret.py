"""Regret of a policy under reward uncertainty, max regret over a reward
polytope (exact MIP, LP relaxation, alternating optimization), and minimax
regret via iterative constraint generation.

The adversary's problem for a fixed policy f is the mixed-integer program

    max  alpha . V - r . f
    s.t. Q_a = r_a + gamma P_a V          (Q consistent with r)
         V >= Q_a                          (V is the optimal value...)
         V <= (1 - I_a) M_a + Q_a          (...of the action I selects)
         sum_a I_a(s) = 1,  I binary       (one action per state)
         r in the feasible reward set

with big-M entries M_a = M_top - M_bot_a taken from the pointwise-extreme
rewards.  Minimax regret then alternates between a master LP over (f, delta)
restricted to the constraints generated so far and this subproblem, which
produces the maximally violated constraint.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .lp import BinaryMip, LinearProgram, solve_binary_mip, solve_lp
from .mdp import Mdp, Policy, flow_matrix, occupancy_of_policy, solve_optimal
from .rewards import RewardPolytope, pointwise_extrema

# A new witness matching a generated one to within this tolerance signals a
# numerical stall; constraint generation stops with a warning instead.
DUPLICATE_TOL = 1e-9


@dataclass
class BigMBounds:
    """Value bounds making the policy-indicator constraints tight.

    m_top(s) is the optimal value under the pointwise-max reward; m_bot(s,a)
    the Q-value of the pointwise-min reward's optimal policy; m = m_top - m_bot.
    """

    m_top: np.ndarray  # (n,)
    m_bot: np.ndarray  # (n, k)
    m: np.ndarray  # (n, k)


@dataclass
class WitnessConstraint:
    """An adversarial reward r_i with its optimal value alpha . V_i = r_i . g_i."""

    r: np.ndarray
    value: float
    policy: Policy = None


@dataclass
class TraceEntry:
    iteration: int
    master_value: float
    subproblem_value: float
    elapsed_ms: float


class LiveTrace:
    """Thread-safe anytime trace; ``snapshot`` is a point-in-time copy."""

    def __init__(self):
        self._entries = []
        self._lock = threading.Lock()

    def append(self, entry: TraceEntry):
        with self._lock:
            self._entries.append(entry)

    def snapshot(self):
        with self._lock:
            return tuple(self._entries)


@dataclass
class RegretSolution:
    f: np.ndarray
    delta: float
    witness: WitnessConstraint
    generated: tuple
    trace: tuple
    mode: str
    certified: bool
    lower_bound: float
    upper_bound: float = None
    termination: str = "converged"
    warnings: tuple = field(default=())


def regret(mdp: Mdp, f, r) -> float:
    """R(f, r) = max_g r.g - r.f, computed as alpha . V*(r) - r . f."""
    f = np.asarray(f, dtype=float).reshape(-1)
    r = np.asarray(r, dtype=float).reshape(-1)
    _, V, _ = solve_optimal(mdp, r)
    return float(mdp.alpha @ V - r @ f)


def big_m(mdp: Mdp, R: RewardPolytope) -> BigMBounds:
    """Big-M entries from the pointwise reward extrema (which need not be
    feasible points of the polytope -- only the bounds matter)."""
    r_lo, r_hi = pointwise_extrema(R)
    _, v_top, _ = solve_optimal(mdp, r_hi)
    _, _, q_bot = solve_optimal(mdp, r_lo)
    m = v_top[:, None] - q_bot
    return BigMBounds(m_top=v_top, m_bot=q_bot, m=m)


def _adversary_program(mdp: Mdp, f, R: RewardPolytope, bounds: BigMBounds, tighten=True):
    """LinearProgram over x = [Q (nk), V (n), I (nk), r (nk)] plus the
    per-state indicator groups; shared by the exact MIP and its relaxation.

    With ``tighten``, valid variable bounds on V and Q (every feasible point
    has V = V*(r) for a feasible r, sandwiched between the optimal values of
    the pointwise-extreme rewards) are added to prune branch and bound.  The
    standalone LP relaxation must NOT be tightened this way: capping V
    decouples it from r, and the relaxation then stops selecting an
    adversarial reward (the V contamination has to flow through Q for the
    relaxed reward to stay informative).
    """
    n, k, nk = mdp.n, mdp.k, mdp.n_pairs
    f = np.asarray(f, dtype=float).reshape(-1)
    m_entries = np.maximum(bounds.m.reshape(-1), 0.0)
    if tighten:
        pad = 1e-7 * max(1.0, float(np.max(np.abs(bounds.m_top))))
        v_lo = bounds.m_bot.max(axis=1) - pad
        v_hi = bounds.m_top + pad
        q_lo = bounds.m_bot.reshape(-1) - pad
        q_hi = R.hi.reshape(-1) + mdp.gamma * (mdp.P @ bounds.m_top) + pad
    else:
        v_lo = np.full(n, -np.inf)
        v_hi = np.full(n, np.inf)
        q_lo = np.full(nk, -np.inf)
        q_hi = np.full(nk, np.inf)

    eye = sp.eye(nk, format="csr")
    sel = sp.csr_matrix(
        (np.ones(nk), (np.arange(nk), np.repeat(np.arange(n), k))), shape=(nk, n)
    )  # maps V(s) onto each (s, a) row
    P = sp.csr_matrix(mdp.P)
    zero = sp.csr_matrix((nk, nk))

    # Q_sa - gamma P_sa . V - r_sa = 0
    q_def = sp.hstack([eye, -mdp.gamma * P, zero, -eye], format="csr")
    # V_s - Q_sa >= 0
    v_ge = sp.hstack([-eye, sel, zero, zero], format="csr")
    # V_s - Q_sa + M_sa I_sa <= M_sa
    v_le = sp.hstack([-eye, sel, sp.diags(m_entries), zero], format="csr")
    # sum_a I_a(s) = 1: part of the program itself, so the LP relaxation keeps
    # it (dropping it hands the adversary full big-M slack at every state).
    i_sum = sp.hstack([sp.csr_matrix((n, nk + n)), sel.T, sp.csr_matrix((n, nk))], format="csr")

    blocks = [q_def, v_ge, v_le, i_sum]
    relations = ["="] * nk + [">="] * nk + ["<="] * nk + ["="] * n
    rhs = [np.zeros(nk), np.zeros(nk), m_entries, np.ones(n)]

    crows, crhs = R.constraint_rows()
    if crows.shape[0]:
        blocks.append(sp.hstack([sp.csr_matrix((crows.shape[0], 2 * nk + n)), sp.csr_matrix(crows)]))
        relations += ["<="] * crows.shape[0]
        rhs.append(crhs)

    objective = np.concatenate([np.zeros(nk), mdp.alpha, np.zeros(nk), -f])
    lo = np.concatenate([q_lo, v_lo, np.zeros(nk), R.lo.reshape(-1)])
    hi = np.concatenate([q_hi, v_hi, np.ones(nk), R.hi.reshape(-1)])
    lp = LinearProgram(
        objective=objective,
        a=sp.vstack(blocks, format="csr"),
        relations=tuple(relations),
        rhs=np.concatenate(rhs),
        lo=lo,
        hi=hi,
    )
    groups = tuple(tuple(nk + n + s * k + a for a in range(k)) for s in range(n))
    return lp, groups


def _witness_from_reward(mdp, f, r, v0=None):
    f = np.asarray(f, dtype=float).reshape(-1)
    pi, V, _ = solve_optimal(mdp, r, v0=v0)
    value = float(mdp.alpha @ V)
    return WitnessConstraint(r=np.asarray(r, dtype=float).copy(), value=value, policy=pi), (
        value - float(r @ f)
    ), V


def max_regret_exact(mdp: Mdp, f, R: RewardPolytope, bounds: BigMBounds = None):
    """MR(f, R) by the adversary MIP.  Returns (witness, value)."""
    witness, value = _max_regret_exact_full(mdp, f, R, bounds)[:2]
    return witness, value


def _max_regret_exact_full(mdp, f, R, bounds=None, time_limit=None, v0=None):
    """(witness, value, V_warm, proved_upper, closed).

    ``value`` is the exactly re-evaluated regret of the incumbent reward (the
    solver's own objective carries feasibility slop); ``proved_upper`` is the
    solver's dual bound, valid even on a time-limit hit; ``closed`` says the
    MIP ran to proven optimality."""
    if bounds is None:
        bounds = big_m(mdp, R)
    lp, groups = _adversary_program(mdp, f, R, bounds)
    # The sum-to-one rows already live in the base program.
    mip = BinaryMip(base=lp, binary=tuple(i for g in groups for i in g))
    sol = solve_binary_mip(mip, time_limit=time_limit)
    if sol.status == "infeasible":
        raise ValueError("adversary MIP infeasible: empty reward polytope")
    if sol.status == "timeout" and sol.x is None:
        return None, -np.inf, None, float(sol.bound), False
    nk, n = mdp.n_pairs, mdp.n
    # Clip the MIP's feasibility slop back into the box.
    r = np.clip(sol.x[2 * nk + n :], R.lo.reshape(-1), R.hi.reshape(-1))
    witness, value, V = _witness_from_reward(mdp, f, r, v0=v0)
    upper = float(sol.bound) if sol.bound is not None else float(sol.value)
    return witness, value, V, upper, sol.status == "optimal"


def max_regret_relaxed(mdp: Mdp, f, R: RewardPolytope, bounds: BigMBounds = None, v0=None):
    """Lower bound on MR(f, R) from the LP relaxation of the adversary MIP.

    The relaxed V is contaminated by big-M slack and is discarded; the relaxed
    reward is feasible, so its exactly-evaluated regret is a valid lower bound.
    Returns (witness, value).
    """
    if bounds is None:
        bounds = big_m(mdp, R)
    lp, _ = _adversary_program(mdp, f, R, bounds, tighten=False)
    sol = solve_lp(lp)
    if not sol.optimal:
        raise ValueError(f"adversary relaxation {sol.status}: empty reward polytope?")
    nk, n = mdp.n_pairs, mdp.n
    r = sol.x[2 * nk + n :]
    witness, value, _ = _witness_from_reward(mdp, f, r, v0=v0)
    return witness, value


def _best_reward_for(R: RewardPolytope, weights):
    """argmax_r r . weights over the polytope (componentwise for boxes)."""
    if R.is_box():
        return np.where(weights > 0, R.hi.reshape(-1), R.lo.reshape(-1))
    sol = solve_lp(R._feasibility_lp(weights))
    if not sol.optimal:
        raise ValueError("reward polytope is empty")
    return sol.x


def _coordinate_ascent(mdp, f, R, r0, max_rounds=100, v0=None, round_values=None):
    """Alternate best adversary policy (fixed reward) and best adversarial
    reward (fixed policy) from seed ``r0``; the round values never decrease.
    Returns the final reward and warm-start value function."""
    f = np.asarray(f, dtype=float).reshape(-1)
    r = np.asarray(r0, dtype=float).copy()
    best = -np.inf
    V = v0
    for _ in range(max_rounds):
        pi, V, _ = solve_optimal(mdp, r, v0=V)
        g = occupancy_of_policy(mdp, pi)
        r = _best_reward_for(R, g - f)
        value = float(r @ (g - f))
        if round_values is not None:
            round_values.append(value)
        if value <= best + 1e-9:
            best = max(best, value)
            break
        best = value
    return r, V


def max_regret_alternating(
    mdp: Mdp, f, R: RewardPolytope, max_rounds=100, v0=None, round_values=None
):
    """Coordinate-ascent lower bound on MR(f, R): alternately fix the reward
    (best adversary policy) and the policy (best adversarial reward).

    Seeded at the box midpoint; stops when a round improves by less than 1e-9.
    ``round_values``, if a list, collects the value after each round (they
    never decrease).  Returns (witness, value).
    """
    r, V = _coordinate_ascent(
        mdp, f, R, R.midpoint(), max_rounds=max_rounds, v0=v0, round_values=round_values
    )
    witness, value, _ = _witness_from_reward(mdp, f, r, v0=V)
    return witness, value


def _solve_master(mdp: Mdp, generated):
    """min delta over valid occupancies subject to the generated constraints
    value_i - r_i . f <= delta.  Returns (f, delta)."""
    nk = mdp.n_pairs
    A_flow = flow_matrix(mdp)
    rows = [np.concatenate([A_flow, np.zeros((mdp.n, 1))], axis=1)]
    relations = ["="] * mdp.n
    rhs = [mdp.alpha]
    if generated:
        cut = np.concatenate(
            [-np.vstack([w.r for w in generated]), -np.ones((len(generated), 1))], axis=1
        )
        rows.append(cut)
        relations += ["<="] * len(generated)
        rhs.append(np.array([-w.value for w in generated]))
    lp = LinearProgram(
        objective=np.concatenate([np.zeros(nk), [-1.0]]),
        a=np.vstack(rows),
        relations=tuple(relations),
        rhs=np.concatenate(rhs),
        lo=np.zeros(nk + 1),
        hi=np.full(nk + 1, np.inf),
    )
    sol = solve_lp(lp)
    if not sol.optimal:
        raise ValueError(f"master LP {sol.status}")
    return sol.x[:nk], float(sol.x[nk])


def minimax_regret(
    mdp: Mdp,
    R: RewardPolytope,
    mode: str = "exact",
    tolerance: float = 1e-6,
    max_iterations: int = 200,
    time_limit: float = None,
    certify: bool = False,
    live_trace: LiveTrace = None,
    mip_time_limit: float = None,
    warm_constraints=(),
) -> RegretSolution:
    """Minimax regret by constraint generation.

    ``mode`` picks the subproblem: "exact" (MIP; terminates with a certified
    optimum), "relaxed" or "alternating" (lower-bound subproblems; the master
    value is then a certified lower bound on MMR, and ``certify=True`` runs
    one exact MIP on the final policy to attach a certified upper bound).
    The convergence tolerance is relative: MR <= master + tolerance * max(1,
    |master|).

    ``warm_constraints`` seeds the master with previously generated witnesses;
    any whose reward has left the polytope (after elicitation tightened it)
    are dropped, so the master stays a valid restricted-adversary bound.
    """
    if mode not in ("exact", "relaxed", "alternating"):
        raise ValueError(f"unknown subproblem mode {mode!r}")
    bounds = big_m(mdp, R)
    t0 = time.perf_counter()
    generated = [w for w in warm_constraints if R.contains(w.r)]
    trace = []
    warnings_out = []
    termination = "iteration_cap"
    f = None
    sub_value = np.inf
    master_value = 0.0
    witness = None
    V_warm = None

    if max_iterations < 1:
        raise ValueError("max_iterations must be at least 1")
    for it in range(1, max_iterations + 1):
        f, master_value = _solve_master(mdp, generated)
        if mode == "exact":
            witness, sub_value, V_warm, proved, closed = _max_regret_exact_full(
                mdp, f, R, bounds, time_limit=mip_time_limit, v0=V_warm
            )
        elif mode == "relaxed":
            # Polish the relaxed reward by coordinate ascent: the relaxation
            # alone systematically under-cuts near minimax policies, and the
            # ascent (a few MDP solves) recovers most of the lost violation.
            witness, sub_value = max_regret_relaxed(mdp, f, R, bounds, v0=V_warm)
            r_polished, V_asc = _coordinate_ascent(mdp, f, R, witness.r, v0=V_warm)
            w2, v2, _ = _witness_from_reward(mdp, f, r_polished, v0=V_asc)
            if v2 > sub_value:
                witness, sub_value = w2, v2
            proved, closed = sub_value, False
            V_warm = None
        else:
            witness, sub_value = max_regret_alternating(mdp, f, R, v0=V_warm)
            proved, closed = sub_value, False
            V_warm = None
        entry = TraceEntry(
            iteration=it,
            master_value=master_value,
            subproblem_value=sub_value,
            elapsed_ms=(time.perf_counter() - t0) * 1e3,
        )
        trace.append(entry)
        if live_trace is not None:
            live_trace.append(entry)

        if witness is None:  # MIP time limit hit with no incumbent
            warnings_out.append("subproblem time limit hit without an incumbent")
            termination = "time_cap"
            sub_value = proved
            break
        # Convergence gates on the exactly re-evaluated incumbent value; the
        # solver's dual bound carries feasibility slop and is only reported.
        if sub_value <= master_value + tolerance * max(1.0, abs(master_value)):
            termination = "converged"
            if mode == "exact" and not closed:
                warnings_out.append("final subproblem MIP hit its time limit")
            break
        dup = next(
            (
                w
                for w in generated
                if abs(w.value - witness.value) <= DUPLICATE_TOL
                and np.max(np.abs(w.r - witness.r)) <= DUPLICATE_TOL
            ),
            None,
        )
        if dup is not None:
            warnings_out.append(
                "duplicate witness generated; stopping to avoid a numerical stall"
            )
            termination = "duplicate_witness"
            break
        generated.append(witness)
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            termination = "time_cap"
            break

    certified = termination == "converged" and mode == "exact" and closed
    if mode == "exact":
        delta = max(master_value, sub_value)
        lower = master_value
        upper = proved  # proved bound on MR(f), hence a valid upper bound on MMR
    else:
        delta = master_value
        lower = master_value
        upper = None
        if certify:
            upper = _max_regret_exact_full(mdp, f, R, bounds, time_limit=mip_time_limit)[3]

    return RegretSolution(
        f=f,
        delta=delta,
        witness=witness,
        generated=tuple(generated),
        trace=tuple(trace),
        mode=mode,
        certified=certified,
        lower_bound=lower,
        upper_bound=upper,
        termination=termination,
        warnings=tuple(warnings_out),
    )
