"""Instance generators: semi-sparse random MDPs and the autonomic-computing
resource-allocation domain.

Both return (Mdp, RewardPolytope, true reward) and are deterministic given
their seed; the true reward always lies inside the generated polytope.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .mdp import Mdp
from .rewards import LinearRewardConstraint, RewardPolytope


@dataclass(frozen=True)
class RandomMdpSpec:
    """Semi-sparse random MDP: each (s,a) reaches ceil(log2 n) states drawn
    uniformly, with |N(0,1)| weights normalized into a distribution; the true
    reward is uniform on [reward_min, reward_max] and the uncertainty box
    extends u*width_scale below / v*width_scale above it (u, v ~ U[0,1]),
    clipped to the reward interval."""

    n: int
    k: int
    seed: int = 0
    reward_min: float = 0.0
    reward_max: float = 10.0
    width_scale: float = 1.0
    gamma: float = 0.95

    def __post_init__(self):
        if self.n < 2 or self.k < 1:
            raise ValueError("need n >= 2 and k >= 1")
        if not self.reward_min < self.reward_max:
            raise ValueError("reward interval must be nondegenerate")


def gen_random(spec: RandomMdpSpec):
    rng = np.random.default_rng(spec.seed)
    n, k = spec.n, spec.k
    n_succ = math.ceil(math.log2(n))

    transitions = []
    for _ in range(n):
        row = []
        for _ in range(k):
            succ = rng.choice(n, size=n_succ, replace=False)
            while True:
                w = np.abs(rng.normal(size=n_succ))
                if w.sum() > 1e-12:
                    break
            w = w / w.sum()
            row.append(list(zip(succ.tolist(), w.tolist())))
        transitions.append(row)

    mdp = Mdp(n, k, transitions, gamma=spec.gamma, alpha=np.full(n, 1.0 / n))

    r_true = rng.uniform(spec.reward_min, spec.reward_max, size=(n, k))
    below = rng.uniform(size=(n, k)) * spec.width_scale
    above = rng.uniform(size=(n, k)) * spec.width_scale
    lo = np.clip(r_true - below, spec.reward_min, spec.reward_max)
    hi = np.clip(r_true + above, spec.reward_min, spec.reward_max)
    return mdp, RewardPolytope(lo, hi), r_true


def allocations(servers: int, units: int):
    """All resource allocations (n_1..n_k) with sum <= units, lexicographic."""
    return [
        m
        for m in itertools.product(range(units + 1), repeat=servers)
        if sum(m) <= units
    ]


@dataclass
class AutonomicSpec:
    """Resource-allocation MDP: states pair an allocation with a demand
    vector, actions install a new allocation, demands evolve by independent
    per-server chains, and reward is summed server utility (at the installed
    allocation) minus kappa per unit of resource taken away.

    Utility bound tables (servers, units+1, demand_levels) and demand chains
    may be supplied; anything left None is generated from the seed.
    """

    servers: int = 2
    units: int = 3
    demand_levels: int = 3
    kappa: float = 0.5
    gamma: float = 0.95
    seed: int = 0
    utility_lo: np.ndarray = None
    utility_hi: np.ndarray = None
    demand_chains: np.ndarray = None
    monotonic: bool = False
    utility_max: float = 10.0
    width_scale: float = 5.0

    def table_shape(self):
        return (self.servers, self.units + 1, self.demand_levels)


def _monotone_repair(u):
    """Componentwise running max along the resource then demand axes."""
    u = np.maximum.accumulate(u, axis=1)
    return np.maximum.accumulate(u, axis=2)


def _sample_true_utilities(spec, rng):
    shape = spec.table_shape()
    if spec.utility_lo is None:
        u_true = rng.uniform(0.0, spec.utility_max, size=shape)
        if spec.monotonic:
            u_true = _monotone_repair(u_true)
        below = rng.uniform(size=shape) * spec.width_scale
        above = rng.uniform(size=shape) * spec.width_scale
        u_lo = np.clip(u_true - below, 0.0, spec.utility_max)
        u_hi = np.clip(u_true + above, 0.0, spec.utility_max)
        return u_true, u_lo, u_hi

    u_lo = np.asarray(spec.utility_lo, dtype=float)
    u_hi = np.asarray(spec.utility_hi, dtype=float)
    if u_lo.shape != shape or u_hi.shape != shape:
        raise ValueError(f"utility tables must have shape {shape}")
    if np.any(u_lo > u_hi):
        raise ValueError("utility lower bound exceeds upper bound")
    if not spec.monotonic:
        return rng.uniform(u_lo, u_hi), u_lo, u_hi
    for _ in range(200):  # rejection sampling, then repair as a fallback
        u = rng.uniform(u_lo, u_hi)
        if np.all(u == _monotone_repair(u.copy())):
            return u, u_lo, u_hi
    u = _monotone_repair(rng.uniform(u_lo, u_hi))
    if np.any(u > u_hi + 1e-12):
        raise ValueError("utility bounds admit no monotone table (lo > hi after repair)")
    return u, u_lo, u_hi


def gen_autonomic(spec: AutonomicSpec):
    rng = np.random.default_rng(spec.seed)
    k_srv, units, D = spec.servers, spec.units, spec.demand_levels
    allocs = allocations(k_srv, units)
    demands = list(itertools.product(range(D), repeat=k_srv))
    n_a, n_d = len(allocs), len(demands)
    n_states = n_a * n_d
    n_actions = n_a

    chains = spec.demand_chains
    if chains is None:
        chains = rng.dirichlet(np.ones(D), size=(k_srv, D))
    else:
        chains = np.asarray(chains, dtype=float)
        if chains.shape != (k_srv, D, D):
            raise ValueError(f"demand chains must have shape {(k_srv, D, D)}")
        if np.any(np.abs(chains.sum(axis=2) - 1.0) > 1e-9) or np.any(chains < 0):
            raise ValueError("demand chains must be row-stochastic")

    u_true, u_lo, u_hi = _sample_true_utilities(spec, rng)

    def state_index(alloc_idx, demand_idx):
        return alloc_idx * n_d + demand_idx

    # Demand successor distributions factor across servers; precompute per
    # current demand vector the distribution over successor demand vectors.
    demand_next = np.empty((n_d, n_d))
    for di, d in enumerate(demands):
        probs = np.ones(n_d)
        for dj, d2 in enumerate(demands):
            p = 1.0
            for i in range(k_srv):
                p *= chains[i, d[i], d2[i]]
            probs[dj] = p
        demand_next[di] = probs

    transitions = []
    r_true = np.zeros((n_states, n_actions))
    lo = np.zeros((n_states, n_actions))
    hi = np.zeros((n_states, n_actions))
    for ai, alloc in enumerate(allocs):
        for di, d in enumerate(demands):
            s = state_index(ai, di)
            row = []
            for mi, m in enumerate(allocs):
                cost = spec.kappa * sum(max(0, alloc[i] - m[i]) for i in range(k_srv))
                util_true = sum(u_true[i, m[i], d[i]] for i in range(k_srv))
                util_lo = sum(u_lo[i, m[i], d[i]] for i in range(k_srv))
                util_hi = sum(u_hi[i, m[i], d[i]] for i in range(k_srv))
                r_true[s, mi] = util_true - cost
                lo[s, mi] = util_lo - cost
                hi[s, mi] = util_hi - cost
                row.append(
                    [
                        (state_index(mi, dj), float(demand_next[di, dj]))
                        for dj in range(n_d)
                        if demand_next[di, dj] > 0.0
                    ]
                )
            transitions.append(row)
    # transitions were appended demand-major within each allocation, matching
    # state_index = alloc_idx * n_d + demand_idx

    constraints = _monotonicity_rows(spec, allocs, demands) if spec.monotonic else ()
    mdp = Mdp(
        n_states,
        n_actions,
        transitions,
        gamma=spec.gamma,
        alpha=np.full(n_states, 1.0 / n_states),
    )
    R = RewardPolytope(lo, hi, constraints)
    if not R.contains(r_true.reshape(-1)):
        raise ValueError("generated true reward violates the polytope")
    return mdp, R, r_true


def _monotonicity_rows(spec, allocs, demands):
    """Linear rows on induced reward coordinates encoding that each server's
    utility is nondecreasing in its resource and demand levels.

    Each u-space covering inequality is pinned through one representative
    (state, action) coordinate pair: the state with allocation 0 and a
    canonical demand, so the reallocation costs of the two coordinates agree.
    """
    k_srv, units, D = spec.servers, spec.units, spec.demand_levels
    n_d = len(demands)
    alloc_index = {m: i for i, m in enumerate(allocs)}
    demand_index = {d: i for i, d in enumerate(demands)}
    zero_alloc = alloc_index[(0,) * k_srv]

    def coord(demand, action_alloc):
        s = zero_alloc * n_d + demand_index[demand]
        return s, alloc_index[action_alloc]

    rows = []
    for i in range(k_srv):
        for n_i in range(units):
            base = [0] * k_srv
            base[i] = n_i
            up = list(base)
            up[i] = n_i + 1
            if sum(up) > units:
                continue
            for d_i in range(D):
                dvec = [0] * k_srv
                dvec[i] = d_i
                s, a = coord(tuple(dvec), tuple(base))
                s2, a2 = coord(tuple(dvec), tuple(up))
                # u_i(n,d) - u_i(n+1,d) <= 0; costs cancel (same state).
                rows.append(
                    LinearRewardConstraint(terms=((s, a, 1.0), (s2, a2, -1.0)), rhs=0.0)
                )
        for d_i in range(D - 1):
            for n_i in range(units + 1):
                base = [0] * k_srv
                base[i] = n_i
                dlo = [0] * k_srv
                dlo[i] = d_i
                dhi = list(dlo)
                dhi[i] = d_i + 1
                s, a = coord(tuple(dlo), tuple(base))
                s2, a2 = coord(tuple(dhi), tuple(base))
                rows.append(
                    LinearRewardConstraint(terms=((s, a, 1.0), (s2, a2, -1.0)), rhs=0.0)
                )
    return tuple(rows)
