"""Shared file formats: MDP / reward-polytope / instance JSON, trace CSVs,
and full elicitation-session snapshots (what the service persists).

Parse errors carry the JSON field path that failed, e.g.
``mdp.transitions[3][1]: probabilities must sum to 1``.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .elicitation import (
    ElicitationSession,
    MetricSnapshot,
    RobustCriterion,
    SimulatedUser,
    Strategy,
)
from .mdp import Mdp, MdpInputError
from .rewards import BoundQuery, LinearRewardConstraint, QueryResponse, RewardPolytope

REGRET_TRACE_HEADER = ["iteration", "master_value", "subproblem_value", "elapsed_ms"]
METRIC_TRACE_HEADER = [
    "query_index",
    "mmr",
    "maximin_value",
    "true_regret",
    "chi",
    "distinct_pairs",
    "elapsed_ms",
]


class FormatError(ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


def _expect(obj, key, kind, path):
    if not isinstance(obj, dict):
        raise FormatError(path, "expected an object")
    if key not in obj:
        raise FormatError(f"{path}.{key}" if path else key, "missing field")
    value = obj[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise FormatError(f"{path}.{key}" if path else key, "expected a number")
        return float(value)
    if kind is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise FormatError(f"{path}.{key}" if path else key, "expected an integer")
        return value
    if not isinstance(value, kind):
        raise FormatError(f"{path}.{key}" if path else key, f"expected {kind.__name__}")
    return value


# -- MDP -------------------------------------------------------------------


def mdp_to_json(mdp: Mdp) -> dict:
    return {
        "n": mdp.n,
        "k": mdp.k,
        "gamma": mdp.gamma,
        "alpha": mdp.alpha.tolist(),
        "transitions": [
            [[[t, p] for t, p in cell] for cell in row] for row in mdp.transitions
        ],
    }


def mdp_from_json(obj, path="mdp") -> Mdp:
    n = _expect(obj, "n", int, path)
    k = _expect(obj, "k", int, path)
    gamma = _expect(obj, "gamma", float, path)
    alpha = _expect(obj, "alpha", list, path)
    transitions = _expect(obj, "transitions", list, path)
    if len(transitions) != n:
        raise FormatError(f"{path}.transitions", f"expected {n} state rows")
    parsed = []
    for s, row in enumerate(transitions):
        if not isinstance(row, list) or len(row) != k:
            raise FormatError(f"{path}.transitions[{s}]", f"expected {k} action cells")
        cells = []
        for a, cell in enumerate(row):
            if not isinstance(cell, list):
                raise FormatError(f"{path}.transitions[{s}][{a}]", "expected a list of [t, p]")
            pairs = []
            for i, tp in enumerate(cell):
                if not (isinstance(tp, list) and len(tp) == 2):
                    raise FormatError(
                        f"{path}.transitions[{s}][{a}][{i}]", "expected a [successor, prob] pair"
                    )
                pairs.append((tp[0], tp[1]))
            cells.append(pairs)
        parsed.append(cells)
    try:
        return Mdp(n, k, parsed, gamma=gamma, alpha=np.asarray(alpha, dtype=float))
    except (MdpInputError, ValueError, TypeError) as exc:
        raise FormatError(path, str(exc))


# -- Reward polytope ---------------------------------------------------------


def polytope_to_json(R: RewardPolytope) -> dict:
    out = {"lo": R.lo.tolist(), "hi": R.hi.tolist()}
    if R.constraints:
        out["constraints"] = [
            {"terms": [[s, a, c] for s, a, c in con.terms], "rhs": con.rhs}
            for con in R.constraints
        ]
    return out


def polytope_from_json(obj, path="polytope") -> RewardPolytope:
    lo = _expect(obj, "lo", list, path)
    hi = _expect(obj, "hi", list, path)
    constraints = []
    for i, con in enumerate(obj.get("constraints", [])):
        terms = _expect(con, "terms", list, f"{path}.constraints[{i}]")
        rhs = _expect(con, "rhs", float, f"{path}.constraints[{i}]")
        parsed = []
        for j, t in enumerate(terms):
            if not (isinstance(t, list) and len(t) == 3):
                raise FormatError(
                    f"{path}.constraints[{i}].terms[{j}]", "expected [s, a, coeff]"
                )
            parsed.append((int(t[0]), int(t[1]), float(t[2])))
        constraints.append(LinearRewardConstraint(terms=tuple(parsed), rhs=rhs))
    try:
        return RewardPolytope(
            np.asarray(lo, dtype=float), np.asarray(hi, dtype=float), tuple(constraints)
        )
    except ValueError as exc:
        raise FormatError(path, str(exc))


# -- Instances ----------------------------------------------------------------


def instance_to_json(mdp, R, r_true=None) -> dict:
    out = {"mdp": mdp_to_json(mdp), "polytope": polytope_to_json(R)}
    if r_true is not None:
        out["r_true"] = np.asarray(r_true, dtype=float).reshape(mdp.n, mdp.k).tolist()
    return out


def instance_from_json(obj):
    mdp = mdp_from_json(_expect(obj, "mdp", dict, ""))
    R = polytope_from_json(_expect(obj, "polytope", dict, ""))
    if (R.n, R.k) != (mdp.n, mdp.k):
        raise FormatError("polytope", "dimensions disagree with the mdp")
    r_true = None
    if obj.get("r_true") is not None:
        r_true = np.asarray(obj["r_true"], dtype=float)
        if r_true.shape != (mdp.n, mdp.k):
            raise FormatError("r_true", f"expected an {mdp.n} x {mdp.k} matrix")
    return mdp, R, r_true


def load_instance(path):
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(str(path), f"invalid JSON: {exc}")
    return instance_from_json(obj)


def save_instance(path, mdp, R, r_true=None):
    with open(path, "w") as fh:
        json.dump(instance_to_json(mdp, R, r_true), fh)


# -- Trace CSVs ----------------------------------------------------------------


def write_regret_trace(path, trace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REGRET_TRACE_HEADER)
        for e in trace:
            w.writerow([e.iteration, repr(e.master_value), repr(e.subproblem_value), repr(e.elapsed_ms)])


def write_metric_trace(path, trace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRIC_TRACE_HEADER)
        for m in trace:
            w.writerow(
                [
                    m.query_index,
                    repr(m.max_regret),
                    repr(m.maximin_value),
                    "" if m.true_regret is None else repr(m.true_regret),
                    repr(m.chi),
                    m.distinct_pairs,
                    repr(m.elapsed_ms),
                ]
            )


# -- Session snapshots -----------------------------------------------------------


def _query_to_json(q: BoundQuery):
    return {"s": q.s, "a": q.a, "b": q.b, "epsilon": q.epsilon}


def _query_from_json(obj, path):
    return BoundQuery(
        s=_expect(obj, "s", int, path),
        a=_expect(obj, "a", int, path),
        b=_expect(obj, "b", float, path),
        epsilon=_expect(obj, "epsilon", float, path),
    )


def _snapshot_to_json(m: MetricSnapshot):
    return {
        "query_index": m.query_index,
        "mmr": m.max_regret,
        "maximin_value": m.maximin_value,
        "true_regret": m.true_regret,
        "chi": m.chi,
        "distinct_pairs": m.distinct_pairs,
        "elapsed_ms": m.elapsed_ms,
    }


def _snapshot_from_json(obj):
    return MetricSnapshot(
        query_index=obj["query_index"],
        max_regret=obj["mmr"],
        maximin_value=obj["maximin_value"],
        true_regret=obj.get("true_regret"),
        chi=obj["chi"],
        distinct_pairs=obj["distinct_pairs"],
        elapsed_ms=obj["elapsed_ms"],
    )


def session_to_json(session: ElicitationSession) -> dict:
    return {
        "mdp": mdp_to_json(session.mdp),
        "initial_polytope": polytope_to_json(session.initial_polytope),
        "polytope": polytope_to_json(session.polytope),
        "criterion": session.criterion.value,
        "strategy": session.strategy.value,
        "solver_mode": session.solver_mode,
        "metric_mode": session.metric_mode,
        "tau": session.tau,
        "budget": session.budget,
        "recompute_stride": session.recompute_stride,
        "query_epsilon": session.query_epsilon,
        "user": None
        if session.user is None
        else {"r_true": session.user.r_true.tolist(), "epsilon": session.user.epsilon},
        "query_log": [
            {**_query_to_json(q), "response": resp.value} for q, resp in session.query_log
        ],
        "trace": [_snapshot_to_json(m) for m in session.trace],
        "pending_query": None
        if session.pending_query is None
        else _query_to_json(session.pending_query),
        "terminated": session.terminated,
        "current_f": None if session.current_f is None else list(session.current_f),
        "witness_occupancy": None
        if session.current_witness_occupancy is None
        else list(session.current_witness_occupancy),
    }


def session_from_json(obj) -> ElicitationSession:
    mdp = mdp_from_json(_expect(obj, "mdp", dict, ""))
    user = None
    if obj.get("user") is not None:
        user = SimulatedUser(
            r_true=np.asarray(obj["user"]["r_true"], dtype=float),
            epsilon=float(obj["user"].get("epsilon", 0.0)),
        )
    session = ElicitationSession(
        mdp,
        polytope_from_json(_expect(obj, "initial_polytope", dict, "initial_polytope")),
        criterion=RobustCriterion(obj["criterion"]),
        strategy=Strategy(obj["strategy"]),
        solver_mode=obj["solver_mode"],
        metric_mode=obj["metric_mode"],
        tau=obj.get("tau"),
        budget=obj.get("budget"),
        user=user,
        recompute_stride=obj.get("recompute_stride", 1),
        query_epsilon=obj.get("query_epsilon"),
    )
    session.polytope = polytope_from_json(_expect(obj, "polytope", dict, "polytope"))
    session.query_log = [
        (_query_from_json(e, f"query_log[{i}]"), QueryResponse(e["response"]))
        for i, e in enumerate(obj.get("query_log", []))
    ]
    session.queried_pairs = {(q.s, q.a) for q, _ in session.query_log}
    session.trace = [_snapshot_from_json(e) for e in obj.get("trace", [])]
    session.pending_query = (
        None
        if obj.get("pending_query") is None
        else _query_from_json(obj["pending_query"], "pending_query")
    )
    session.terminated = obj.get("terminated")
    if obj.get("current_f") is not None:
        session.current_f = np.asarray(obj["current_f"], dtype=float)
    if obj.get("witness_occupancy") is not None:
        session.current_witness_occupancy = np.asarray(obj["witness_occupancy"], dtype=float)
    return session
