"""Interactive reward elicitation driven by robust policies.

Query selection follows two heuristics: halve-largest-gap (HLG) picks the
widest remaining interval; current-solution (CS) weights each gap by the
visitation frequencies of the robust policy and, under minimax regret, the
adversarial witness policy.  Every query asks "is r(s,a) >= b?" at the box
midpoint, so any definite answer halves that interval.

A session is an explicit state machine: ``advance`` solves the robust policy,
records metrics, and proposes the next query; ``answer`` applies a response.
``run_elicitation`` drives the machine against a simulated user; the HTTP
service drives the same machine with human answers, so the two transition
identically by construction.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass

import numpy as np

from .maximin import maximin, worst_case_value
from .mdp import Mdp, occupancy_of_policy, solve_optimal
from .regret import max_regret_alternating, max_regret_exact, max_regret_relaxed, minimax_regret
from .rewards import (
    GAP_FLOOR,
    BoundQuery,
    QueryResponse,
    RewardPolytope,
    apply_response,
    gap,
    interval_mass,
)

log = logging.getLogger(__name__)


class Strategy(str, enum.Enum):
    HLG = "hlg"
    CS = "cs"


class RobustCriterion(str, enum.Enum):
    MINIMAX_REGRET = "mmr"
    MAXIMIN = "maximin"


class NoInformativeQuery(Exception):
    """Every interval is already resolved below the gap floor."""


class SessionTerminated(RuntimeError):
    """An answer was posted to a session that has already stopped."""


@dataclass
class SimulatedUser:
    """Answers queries from a hidden true reward, held as an (n, k) matrix;
    ``epsilon`` is the indifference half-width (0 disables Unsure)."""

    r_true: np.ndarray
    epsilon: float = 0.0

    def __post_init__(self):
        self.r_true = np.asarray(self.r_true, dtype=float)
        if self.r_true.ndim != 2:
            raise ValueError("r_true must be an (n, k) matrix")


@dataclass
class MetricSnapshot:
    query_index: int
    maximin_value: float
    max_regret: float
    true_regret: float  # None for human sessions
    chi: float
    distinct_pairs: int
    elapsed_ms: float


def simulate_response(user: SimulatedUser, q: BoundQuery) -> QueryResponse:
    """Yes/No from the hidden reward, Unsure within the indifference width."""
    v = float(user.r_true[q.s, q.a])
    if abs(v - q.b) <= user.epsilon:
        return QueryResponse.UNSURE
    return QueryResponse.YES if v >= q.b else QueryResponse.NO


def _gap_matrix(R: RewardPolytope):
    if R.is_box():
        return R.hi - R.lo
    return np.array([[gap(R, s, a) for a in range(R.k)] for s in range(R.n)])


def select_query_hlg(R: RewardPolytope, floor=GAP_FLOOR, epsilon=0.0) -> BoundQuery:
    """Query the pair with the largest gap at its box midpoint.

    Ties break to the lowest (s, a) index; if no gap exceeds ``floor``,
    raises NoInformativeQuery.
    """
    gaps = _gap_matrix(R)
    masked = np.where(gaps > floor, gaps, -np.inf)
    if not np.any(masked > -np.inf):
        raise NoInformativeQuery("all reward intervals are resolved")
    idx = int(np.argmax(masked))
    s, a = divmod(idx, R.k)
    b = float((R.lo[s, a] + R.hi[s, a]) / 2.0)
    return BoundQuery(s=s, a=a, b=b, epsilon=epsilon)


def select_query_cs(
    R: RewardPolytope, f, g=None, floor=GAP_FLOOR, epsilon=0.0
) -> BoundQuery:
    """Current-solution query: largest gap weighted by the visitation
    frequencies of the robust policy f and (when present) the witness g.

    Falls back to HLG when every weighted score is zero.
    """
    gaps = _gap_matrix(R)
    fm = np.asarray(f, dtype=float).reshape(R.n, R.k)
    scores = fm * gaps
    if g is not None:
        gm = np.asarray(g, dtype=float).reshape(R.n, R.k)
        scores = np.maximum(scores, gm * gaps)
    scores = np.where(gaps > floor, scores, -np.inf)
    if not np.any(scores > 0.0):
        log.debug("all CS scores are zero; falling back to HLG selection")
        return select_query_hlg(R, floor=floor, epsilon=epsilon)
    idx = int(np.argmax(scores))
    s, a = divmod(idx, R.k)
    b = float((R.lo[s, a] + R.hi[s, a]) / 2.0)
    return BoundQuery(s=s, a=a, b=b, epsilon=epsilon)


class ElicitationSession:
    """State machine for one elicitation run.

    The loop per query: solve the robust policy under the current polytope
    (per ``criterion``/``solver_mode``, reusing a stale policy between
    recompute strides), record a metric snapshot, stop if max regret fell
    below ``tau`` or the budget is exhausted, otherwise propose a query and
    wait for ``answer``.  The metric trace always carries one baseline
    snapshot more than the query log.
    """

    def __init__(
        self,
        mdp: Mdp,
        polytope: RewardPolytope,
        criterion: RobustCriterion = RobustCriterion.MINIMAX_REGRET,
        strategy: Strategy = Strategy.CS,
        solver_mode: str = "relaxed",
        metric_mode: str = "exact",
        tau: float = None,
        tau_fraction: float = None,
        budget: int = None,
        user: SimulatedUser = None,
        recompute_stride: int = 1,
        query_epsilon: float = None,
        solver_kwargs: dict = None,
    ):
        self.mdp = mdp
        self.polytope = polytope
        self.initial_polytope = polytope
        self.criterion = RobustCriterion(criterion)
        self.strategy = Strategy(strategy)
        self.solver_mode = solver_mode
        self.metric_mode = metric_mode
        self.tau = tau
        self.tau_fraction = tau_fraction
        self.budget = budget if budget is not None else 4 * mdp.n_pairs
        self.user = user
        self.recompute_stride = max(1, int(recompute_stride))
        self.solver_kwargs = dict(solver_kwargs or {})

        # The Unsure clamp must be at least the user's indifference width or a
        # consistent user's true reward could be cut off.
        if query_epsilon is None:
            query_epsilon = 0.01 * float(np.mean(polytope.hi - polytope.lo))
        if user is not None:
            query_epsilon = max(query_epsilon, user.epsilon)
        self.query_epsilon = query_epsilon

        self.query_log = []  # (BoundQuery, QueryResponse)
        self.trace = []  # MetricSnapshot
        self.queried_pairs = set()
        self.pending_query = None
        self.terminated = None  # reason string once stopped
        self.current_f = None
        self.current_witness_occupancy = None
        self.last_solution = None
        self._policy_fresh = False
        self._true_optimum = None
        if user is not None:
            r_true = np.asarray(user.r_true, dtype=float).reshape(-1)
            if not polytope.contains(r_true):
                raise ValueError("simulated user's true reward lies outside the polytope")
            _, V, _ = solve_optimal(mdp, r_true)
            self._true_optimum = float(mdp.alpha @ V)
        self._t0 = time.perf_counter()

    # -- robust solving ----------------------------------------------------

    def _solve_robust(self):
        if self.criterion is RobustCriterion.MAXIMIN:
            sol = maximin(self.mdp, self.polytope)
            self.current_f = sol.f
            self.current_witness_occupancy = None
        else:
            warm = getattr(self.last_solution, "generated", ())
            sol = minimax_regret(
                self.mdp,
                self.polytope,
                mode=self.solver_mode,
                warm_constraints=warm,
                **self.solver_kwargs,
            )
            self.current_f = sol.f
            self.current_witness_occupancy = (
                occupancy_of_policy(self.mdp, sol.witness.policy)
                if sol.witness is not None and sol.witness.policy is not None
                else None
            )
        self.last_solution = sol
        self._policy_fresh = True
        return sol

    def _policy_max_regret(self):
        """Max regret of the current policy at the configured metric mode."""
        if (
            self.criterion is RobustCriterion.MINIMAX_REGRET
            and self.solver_mode == "exact"
            and self.metric_mode == "exact"
            and self._policy_fresh
            and getattr(self.last_solution, "certified", False)
        ):
            return self.last_solution.delta
        solvers = {
            "exact": max_regret_exact,
            "relaxed": max_regret_relaxed,
            "alternating": max_regret_alternating,
        }
        _, value = solvers[self.metric_mode](self.mdp, self.current_f, self.polytope)
        return value

    # -- state transitions ---------------------------------------------------

    def advance(self):
        """Solve, snapshot metrics, and propose the next query.

        Returns the pending BoundQuery, or None once the session has stopped.
        Calling again without answering returns the same query.
        """
        if self.terminated:
            return None
        if self.pending_query is not None:
            return self.pending_query

        n_answered = len(self.query_log)
        if self.current_f is None or n_answered % self.recompute_stride == 0:
            self._solve_robust()
        snap = metrics(self)
        self.trace.append(snap)
        if self.tau is None:
            # Baseline snapshot pins the stopping threshold.
            if self.tau_fraction is not None:
                self.tau = self.tau_fraction * snap.max_regret
            else:
                self.tau = 1e-6 * max(1.0, snap.max_regret)
        if snap.max_regret <= self.tau:
            self.terminated = "regret_threshold"
            return None
        if n_answered >= self.budget:
            self.terminated = "budget"
            return None
        try:
            if self.strategy is Strategy.HLG:
                q = select_query_hlg(self.polytope, epsilon=self.query_epsilon)
            else:
                q = select_query_cs(
                    self.polytope,
                    self.current_f,
                    self.current_witness_occupancy,
                    epsilon=self.query_epsilon,
                )
        except NoInformativeQuery:
            self.terminated = "resolved"
            return None
        self.pending_query = q
        return q

    def answer(self, resp: QueryResponse):
        if self.terminated:
            raise SessionTerminated(f"session already stopped ({self.terminated})")
        if self.pending_query is None:
            raise RuntimeError("no pending query; call advance() first")
        resp = QueryResponse(resp)
        q = self.pending_query
        self.polytope = apply_response(self.polytope, q, resp)
        self.query_log.append((q, resp))
        self.queried_pairs.add((q.s, q.a))
        self.pending_query = None
        self._policy_fresh = False

    def stop(self):
        """Mark the session terminal (idempotent)."""
        if not self.terminated:
            self.terminated = "stopped"
        self.pending_query = None

    @property
    def certified(self):
        """True when the last snapshot's regret bound is an exact certificate."""
        return bool(self.trace) and self.metric_mode == "exact"

    def elapsed_ms(self):
        return (time.perf_counter() - self._t0) * 1e3


def metrics(session: ElicitationSession) -> MetricSnapshot:
    """Quality metrics of the session's current robust policy: security value,
    max regret, true regret (simulated sessions only), remaining interval
    mass, and query coverage."""
    if session.current_f is None:
        raise RuntimeError("no robust policy solved yet")
    f = session.current_f
    true_regret = None
    if session._true_optimum is not None:
        r_true = np.asarray(session.user.r_true, dtype=float).reshape(-1)
        true_regret = session._true_optimum - float(r_true @ f)
    return MetricSnapshot(
        query_index=len(session.query_log),
        maximin_value=worst_case_value(session.polytope, f),
        max_regret=session._policy_max_regret(),
        true_regret=true_regret,
        chi=interval_mass(session.polytope),
        distinct_pairs=len(session.queried_pairs),
        elapsed_ms=session.elapsed_ms(),
    )


def run_elicitation(session: ElicitationSession):
    """Drive a simulated session to termination.

    Returns (metric trace, final robust solution).  Deterministic given the
    session's inputs.
    """
    if session.user is None:
        raise ValueError("run_elicitation requires a simulated user")
    while True:
        q = session.advance()
        if q is None:
            break
        session.answer(simulate_response(session.user, q))
    return tuple(session.trace), session.last_solution
