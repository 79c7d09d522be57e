"""Finite discounted MDPs: value iteration, policy evaluation, occupancy
frequencies, and the dual (occupancy-measure) linear program.

Reward vectors, value functions and occupancy vectors are plain numpy arrays.
State-action pairs are flattened as ``s * k + a`` throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import LinearProgram, solve_lp

# Occupancy invariants are checked at this tolerance (mass and flow).
FLOW_TOL = 1e-6


class MdpInputError(ValueError):
    pass


class Mdp:
    """Immutable ``<S, A, {P_sa}, gamma, alpha>`` model (reward supplied per call).

    ``transitions[s][a]`` is a sparse list of (successor, probability) pairs
    summing to one.  A dense (n*k, n) transition matrix is cached for numerics.
    """

    def __init__(self, n, k, transitions, gamma, alpha):
        self.n = int(n)
        self.k = int(k)
        self.gamma = float(gamma)
        self.alpha = np.asarray(alpha, dtype=float)
        if not 0.0 <= self.gamma < 1.0:
            raise MdpInputError("discount must lie in [0, 1)")
        if self.alpha.shape != (self.n,) or np.any(self.alpha < -1e-12):
            raise MdpInputError("alpha must be a distribution over states")
        if abs(self.alpha.sum() - 1.0) > 1e-9:
            raise MdpInputError("alpha must sum to 1")
        if len(transitions) != self.n or any(len(row) != self.k for row in transitions):
            raise MdpInputError("transitions must be an n x k nested list")

        self.transitions = tuple(
            tuple(tuple((int(t), float(p)) for t, p in cell) for cell in row)
            for row in transitions
        )
        P = np.zeros((self.n * self.k, self.n))
        for s in range(self.n):
            for a in range(self.k):
                for t, p in self.transitions[s][a]:
                    if not 0 <= t < self.n:
                        raise MdpInputError(f"successor {t} out of range at ({s},{a})")
                    if p < -1e-12:
                        raise MdpInputError(f"negative probability at ({s},{a})")
                    P[s * self.k + a, t] += p
        rowsum = P.sum(axis=1)
        if np.any(np.abs(rowsum - 1.0) > 1e-9):
            bad = int(np.argmax(np.abs(rowsum - 1.0)))
            raise MdpInputError(f"transition list at pair {bad} sums to {rowsum[bad]:.12f}")
        self.P = P
        self.P.setflags(write=False)
        self.alpha.setflags(write=False)

    @property
    def n_pairs(self):
        return self.n * self.k

    def sa(self, s, a):
        return s * self.k + a

    def __repr__(self):
        return f"Mdp(n={self.n}, k={self.k}, gamma={self.gamma})"


@dataclass
class Policy:
    """Row-stochastic (n, k) action distribution per state."""

    matrix: np.ndarray
    deterministic: bool = False

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        rows = self.matrix.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > 1e-9):
            raise MdpInputError("policy rows must sum to 1")
        if self.deterministic and not np.all(np.isclose(self.matrix.max(axis=1), 1.0)):
            raise MdpInputError("deterministic flag requires a unit entry per row")

    @classmethod
    def from_actions(cls, actions, k):
        actions = np.asarray(actions, dtype=int)
        m = np.zeros((actions.shape[0], k))
        m[np.arange(actions.shape[0]), actions] = 1.0
        return cls(m, deterministic=True)

    @property
    def actions(self):
        return np.argmax(self.matrix, axis=1)


def _check_reward(mdp, r):
    r = np.asarray(r, dtype=float)
    if r.shape == (mdp.n, mdp.k):
        r = r.reshape(-1)
    if r.shape != (mdp.n_pairs,):
        raise MdpInputError(f"reward vector must have length {mdp.n_pairs}")
    if not np.all(np.isfinite(r)):
        raise MdpInputError("reward entries must be finite")
    return r


def solve_optimal(mdp: Mdp, r, v0=None):
    """Optimal deterministic policy with exact V*, Q*.

    Value iteration runs to residual <= 1e-10 (1-gamma)/gamma, the greedy
    policy is extracted, and one exact policy evaluation removes the residual.
    ``v0`` warm-starts the iteration.
    """
    r = _check_reward(mdp, r)
    gamma = mdp.gamma
    V = np.zeros(mdp.n) if v0 is None else np.asarray(v0, dtype=float).copy()
    if gamma == 0.0:
        Q = r.reshape(mdp.n, mdp.k)
        pi = Policy.from_actions(np.argmax(Q, axis=1), mdp.k)
        return pi, Q.max(axis=1), Q
    tol = 1e-10 * (1.0 - gamma) / gamma
    r2 = r.reshape(mdp.n, mdp.k)
    while True:
        Q = r2 + gamma * (mdp.P @ V).reshape(mdp.n, mdp.k)
        V_new = Q.max(axis=1)
        if np.max(np.abs(V_new - V)) <= tol:
            V = V_new
            break
        V = V_new
    pi = Policy.from_actions(np.argmax(Q, axis=1), mdp.k)
    V, Q = evaluate_policy(mdp, r, pi)
    return pi, V, Q


def evaluate_policy(mdp: Mdp, r, pi: Policy):
    """Exact V, Q of a policy via the (I - gamma P_pi) linear system."""
    r = _check_reward(mdp, r)
    P_pi = np.einsum("sa,sat->st", pi.matrix, mdp.P.reshape(mdp.n, mdp.k, mdp.n))
    r_pi = np.sum(pi.matrix * r.reshape(mdp.n, mdp.k), axis=1)
    try:
        V = np.linalg.solve(np.eye(mdp.n) - mdp.gamma * P_pi, r_pi)
    except np.linalg.LinAlgError as exc:  # cannot occur for gamma < 1
        raise MdpInputError(f"policy evaluation system is singular: {exc}")
    Q = r.reshape(mdp.n, mdp.k) + mdp.gamma * (mdp.P @ V).reshape(mdp.n, mdp.k)
    return V, Q


def occupancy_of_policy(mdp: Mdp, pi: Policy) -> np.ndarray:
    """Discounted visitation frequencies f(s,a) of a policy.

    Solves the flow-conservation system restricted to the policy's support:
    state mass mu = alpha + gamma P_pi^T mu, then f(s,a) = pi(s,a) mu(s).
    """
    P_pi = np.einsum("sa,sat->st", pi.matrix, mdp.P.reshape(mdp.n, mdp.k, mdp.n))
    mu = np.linalg.solve(np.eye(mdp.n) - mdp.gamma * P_pi.T, mdp.alpha)
    f = (pi.matrix * mu[:, None]).reshape(-1)
    # Clip the tiny negatives numerical solves can leave on unreachable states.
    f[np.abs(f) < 1e-13] = 0.0
    return f


def policy_of_occupancy(mdp: Mdp, f) -> Policy:
    """Row-normalized policy of an occupancy vector.

    Unreachable states (visitation below 1e-12) get action 0, keeping the
    result deterministic there for test stability.
    """
    f = np.asarray(f, dtype=float).reshape(mdp.n, mdp.k)
    if np.any(f < -1e-9):
        raise MdpInputError("occupancy entries must be nonnegative")
    f = np.maximum(f, 0.0)
    mass = f.sum(axis=1)
    m = np.zeros_like(f)
    reachable = mass >= 1e-12
    m[reachable] = f[reachable] / mass[reachable, None]
    m[~reachable, 0] = 1.0
    return Policy(m, deterministic=bool(np.all(np.isclose(m.max(axis=1), 1.0))))


def flow_matrix(mdp: Mdp) -> np.ndarray:
    """(n, n*k) matrix A with A f = alpha defining valid occupancies:
    sum_a f(t,a) - gamma sum_{s,a} P_sa(t) f(s,a) = alpha(t)."""
    A = -mdp.gamma * mdp.P.T.copy()
    for t in range(mdp.n):
        A[t, t * mdp.k : (t + 1) * mdp.k] += 1.0
    return A


def check_occupancy(mdp: Mdp, f, tol=FLOW_TOL):
    """Raise unless f is nonnegative, has mass 1/(1-gamma), and conserves flow."""
    f = np.asarray(f, dtype=float)
    if np.any(f < -tol):
        raise MdpInputError("occupancy has negative entries")
    mass = f.sum()
    if abs(mass - 1.0 / (1.0 - mdp.gamma)) > tol:
        raise MdpInputError(f"occupancy mass {mass} != 1/(1-gamma)")
    resid = np.max(np.abs(flow_matrix(mdp) @ f - mdp.alpha))
    if resid > tol:
        raise MdpInputError(f"flow conservation violated by {resid:.2e}")
    return f


def solve_dual_lp(mdp: Mdp, r):
    """max r . f over valid occupancies; the optimum equals alpha . V*."""
    r = _check_reward(mdp, r)
    A = flow_matrix(mdp)
    lp = LinearProgram(
        objective=r,
        a=A,
        relations=("=",) * mdp.n,
        rhs=mdp.alpha,
        lo=np.zeros(mdp.n_pairs),
        hi=np.full(mdp.n_pairs, np.inf),
    )
    sol = solve_lp(lp)
    if not sol.optimal:
        raise MdpInputError(f"dual LP unexpectedly {sol.status}")
    return sol.x, sol.value
