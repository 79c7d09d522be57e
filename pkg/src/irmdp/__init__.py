"""Robust MDP planning under imprecisely specified rewards, and interactive
reward elicitation that shrinks minimax regret fastest.

The package computes minimax-regret and maximin policies over a convex
polytope of feasible rewards, and drives bound-query elicitation with the
halve-largest-gap and current-solution heuristics.
"""

from .domains import AutonomicSpec, RandomMdpSpec, allocations, gen_autonomic, gen_random
from .elicitation import (
    ElicitationSession,
    MetricSnapshot,
    NoInformativeQuery,
    RobustCriterion,
    SimulatedUser,
    Strategy,
    metrics,
    run_elicitation,
    select_query_cs,
    select_query_hlg,
    simulate_response,
)
from .lp import BinaryMip, LinearProgram, LpSolution, solve_binary_mip, solve_lp
from .maximin import MaximinSolution, maximin, worst_case_value
from .mdp import (
    Mdp,
    Policy,
    check_occupancy,
    evaluate_policy,
    flow_matrix,
    occupancy_of_policy,
    policy_of_occupancy,
    solve_dual_lp,
    solve_optimal,
)
from .regret import (
    BigMBounds,
    LiveTrace,
    RegretSolution,
    WitnessConstraint,
    big_m,
    max_regret_alternating,
    max_regret_exact,
    max_regret_relaxed,
    minimax_regret,
    regret,
)
from .rewards import (
    BoundQuery,
    EmptyPolytopeError,
    LinearRewardConstraint,
    QueryResponse,
    RewardPolytope,
    apply_response,
    gap,
    interval_mass,
    pointwise_extrema,
)

__version__ = "0.1.0"

__all__ = [
    "AutonomicSpec",
    "BigMBounds",
    "BinaryMip",
    "BoundQuery",
    "ElicitationSession",
    "EmptyPolytopeError",
    "LinearProgram",
    "LinearRewardConstraint",
    "LiveTrace",
    "LpSolution",
    "MaximinSolution",
    "Mdp",
    "MetricSnapshot",
    "NoInformativeQuery",
    "Policy",
    "QueryResponse",
    "RandomMdpSpec",
    "RegretSolution",
    "RewardPolytope",
    "RobustCriterion",
    "SimulatedUser",
    "Strategy",
    "WitnessConstraint",
    "allocations",
    "apply_response",
    "big_m",
    "check_occupancy",
    "evaluate_policy",
    "flow_matrix",
    "gap",
    "gen_autonomic",
    "gen_random",
    "interval_mass",
    "maximin",
    "max_regret_alternating",
    "max_regret_exact",
    "max_regret_relaxed",
    "mdp",
    "metrics",
    "minimax_regret",
    "occupancy_of_policy",
    "policy_of_occupancy",
    "pointwise_extrema",
    "regret",
    "run_elicitation",
    "select_query_cs",
    "select_query_hlg",
    "simulate_response",
    "solve_binary_mip",
    "solve_dual_lp",
    "solve_lp",
    "solve_optimal",
    "worst_case_value",
]
