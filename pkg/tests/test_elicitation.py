import numpy as np
import pytest

import irmdp.elicitation as elicitation_mod
from irmdp.elicitation import (
    ElicitationSession,
    NoInformativeQuery,
    SessionTerminated,
    SimulatedUser,
    metrics,
    run_elicitation,
    select_query_cs,
    select_query_hlg,
    simulate_response,
)
from irmdp.mdp import Mdp
from irmdp.regret import minimax_regret
from irmdp.rewards import BoundQuery, QueryResponse, RewardPolytope, apply_response

GAMMA = 0.95


def one_state():
    return Mdp(1, 2, [[[(0, 1.0)], [(0, 1.0)]]], gamma=GAMMA, alpha=[1.0])


def random_mdp(seed, n, k):
    rng = np.random.default_rng(seed)
    transitions = []
    for _ in range(n):
        row = []
        for _ in range(k):
            succ = rng.choice(n, size=min(n, 3), replace=False)
            w = rng.uniform(0.1, 1.0, size=succ.size)
            w /= w.sum()
            row.append(list(zip(succ.tolist(), w.tolist())))
        transitions.append(row)
    alpha = rng.uniform(0.2, 1.0, size=n)
    return Mdp(n, k, transitions, gamma=GAMMA, alpha=alpha / alpha.sum())


def random_boxed_instance(seed, n, k, width=3.0):
    mdp = random_mdp(seed, n, k)
    rng = np.random.default_rng(seed + 77)
    r_true = rng.uniform(0, 5, size=(n, k))
    lo = np.clip(r_true - rng.uniform(size=(n, k)) * width, 0, 5)
    hi = np.clip(r_true + rng.uniform(size=(n, k)) * width, 0, 5)
    return mdp, RewardPolytope(lo, hi), r_true


# -- query selection ----------------------------------------------------------


def test_hlg_selects_largest_gap_at_midpoint():
    R = RewardPolytope(np.array([[0.0, 0.25]]), np.array([[2.0, 0.75]]))
    q = select_query_hlg(R)
    assert (q.s, q.a) == (0, 0)
    assert q.b == pytest.approx(1.0)


def test_hlg_breaks_ties_to_lowest_index():
    R = RewardPolytope(np.zeros((2, 2)), np.ones((2, 2)))
    q = select_query_hlg(R)
    assert (q.s, q.a) == (0, 0)
    assert q.b == pytest.approx(0.5)


def test_hlg_raises_when_resolved():
    r = np.full((1, 2), 0.4)
    with pytest.raises(NoInformativeQuery):
        select_query_hlg(RewardPolytope(r, r))


def test_cs_weighted_selection():
    # Spec example: f=(10,10), g=(20,0), unit gaps -> scores (20, 10).
    R = RewardPolytope(np.zeros((1, 2)), np.ones((1, 2)))
    q = select_query_cs(R, np.array([10.0, 10.0]), np.array([20.0, 0.0]))
    assert (q.s, q.a) == (0, 0)
    assert q.b == pytest.approx(0.5)


def test_cs_never_selects_unvisited_pair_while_positive_scores_exist():
    R = RewardPolytope(np.zeros((1, 3)), np.ones((1, 3)))
    f = np.array([0.0, 5.0, 15.0])
    q = select_query_cs(R, f, np.zeros(3))
    assert (q.s, q.a) == (0, 2)


def test_cs_never_selects_resolved_pair():
    lo = np.array([[0.0, 0.7]])
    hi = np.array([[1.0, 0.7]])
    q = select_query_cs(RewardPolytope(lo, hi), np.array([0.0, 20.0]), None)
    assert (q.s, q.a) == (0, 0)  # zero-gap pair excluded despite its weight


def test_cs_falls_back_to_hlg_when_scores_vanish():
    R = RewardPolytope(np.array([[0.0, 0.2]]), np.array([[1.0, 0.9]]))
    q = select_query_cs(R, np.zeros(2), np.zeros(2))
    assert (q.s, q.a) == (0, 0)  # HLG pick: the wider interval


# -- simulated responses ------------------------------------------------------


def test_simulate_response_yes_no_unsure():
    user = SimulatedUser(r_true=np.array([[0.7]]), epsilon=0.0)
    assert simulate_response(user, BoundQuery(0, 0, 0.5)) is QueryResponse.YES
    user = SimulatedUser(r_true=np.array([[0.3]]), epsilon=0.0)
    assert simulate_response(user, BoundQuery(0, 0, 0.5)) is QueryResponse.NO
    user = SimulatedUser(r_true=np.array([[0.5]]), epsilon=0.05)
    assert simulate_response(user, BoundQuery(0, 0, 0.52)) is QueryResponse.UNSURE


# -- session machinery --------------------------------------------------------


def test_budget_zero_gives_baseline_only_trace():
    mdp, R, r_true = random_boxed_instance(0, 3, 2)
    session = ElicitationSession(
        mdp, R, solver_mode="exact", user=SimulatedUser(r_true), budget=0
    )
    trace, _ = run_elicitation(session)
    assert len(trace) == 1
    assert session.terminated == "budget"
    assert trace[0].query_index == 0


def test_degenerate_polytope_terminates_immediately():
    mdp = random_mdp(1, 3, 2)
    r = np.random.default_rng(1).uniform(0, 1, size=(3, 2))
    session = ElicitationSession(
        mdp, RewardPolytope(r, r), solver_mode="exact", user=SimulatedUser(r)
    )
    trace, sol = run_elicitation(session)
    assert len(trace) == 1
    assert session.terminated == "regret_threshold"
    assert trace[0].max_regret == pytest.approx(0.0, abs=1e-6)
    assert trace[0].true_regret == pytest.approx(0.0, abs=1e-6)


def test_hand_simulated_mmr_cs_run():
    # 1 state, 2 self-loop actions, r0 in [0,1], r1 in [0,0.9], true (0.8,0.3).
    # Hand trace: MMR minimizes max(20-f0, 0.9 f0) so f0 = 20/1.9, delta =
    # 180/19; the witness backs action 1, CS scores (f0*1, 20*0.9) pick pair
    # (0,1) at b=0.45 -> No.  Then delta = 9/1.45*... = 20*0.45/1.45, witness
    # again action 1, scores (13.79, 9) pick (0,0) at b=0.5 -> Yes.  Action 0
    # now dominates (lo0=0.5 > hi1=0.45): regret 0 after exactly 2 queries.
    mdp = one_state()
    R = RewardPolytope(np.array([[0.0, 0.0]]), np.array([[1.0, 0.9]]))
    user = SimulatedUser(r_true=np.array([[0.8, 0.3]]), epsilon=0.0)
    session = ElicitationSession(
        mdp, R, strategy="cs", solver_mode="exact", user=user, query_epsilon=0.0
    )
    trace, _ = run_elicitation(session)
    assert [(q.s, q.a, round(q.b, 6), r.value) for q, r in session.query_log] == [
        (0, 1, 0.45, "no"),
        (0, 0, 0.5, "yes"),
    ]
    assert session.terminated == "regret_threshold"
    assert trace[0].max_regret == pytest.approx(180 / 19, abs=1e-6)
    assert trace[-1].max_regret == pytest.approx(0.0, abs=1e-6)
    assert trace[-1].true_regret == pytest.approx(0.0, abs=1e-6)
    assert [round(t.chi, 6) for t in trace] == [1.9, 1.45, 0.95]


def test_trace_is_one_longer_than_query_log():
    mdp, R, r_true = random_boxed_instance(2, 3, 2)
    session = ElicitationSession(
        mdp, R, solver_mode="exact", user=SimulatedUser(r_true), budget=5
    )
    run_elicitation(session)
    assert len(session.trace) == len(session.query_log) + 1


def test_simulated_responses_keep_r_true_feasible():
    mdp, R, r_true = random_boxed_instance(3, 3, 2)
    user = SimulatedUser(r_true, epsilon=0.05)
    session = ElicitationSession(mdp, R, solver_mode="exact", user=user, budget=20)
    while True:
        q = session.advance()
        if q is None:
            break
        session.answer(simulate_response(user, q))
        assert session.polytope.contains(r_true.reshape(-1))


def test_true_regret_bounded_by_certified_max_regret():
    for seed in range(3):
        mdp, R, r_true = random_boxed_instance(seed + 10, 3, 2)
        session = ElicitationSession(
            mdp, R, solver_mode="exact", user=SimulatedUser(r_true), budget=30
        )
        trace, _ = run_elicitation(session)
        assert trace[-1].true_regret <= trace[-1].max_regret + 1e-6
        for snap in trace:
            assert snap.max_regret >= snap.true_regret - 1e-6
            assert snap.true_regret >= -1e-6


def test_minimax_regret_monotone_under_nested_polytopes():
    rng = np.random.default_rng(4)
    for seed in range(4):
        mdp = random_mdp(seed + 30, 3, 2)
        lo = rng.uniform(-1, 0, size=(3, 2))
        hi = lo + rng.uniform(0.5, 2.0, size=(3, 2))
        outer = RewardPolytope(lo, hi)
        shrink_lo = lo + rng.uniform(0, 0.2, size=(3, 2))
        shrink_hi = np.maximum(hi - rng.uniform(0, 0.2, size=(3, 2)), shrink_lo)
        inner = RewardPolytope(shrink_lo, shrink_hi)
        assert (
            minimax_regret(mdp, inner).delta
            <= minimax_regret(mdp, outer).delta + 1e-6
        )


def test_metric_consistency_on_session():
    mdp, R, r_true = random_boxed_instance(5, 3, 2)
    session = ElicitationSession(
        mdp, R, solver_mode="exact", user=SimulatedUser(r_true), budget=3
    )
    session.advance()
    snap = metrics(session)
    assert snap.max_regret >= snap.true_regret - 1e-6
    assert snap.chi == pytest.approx(float(np.sum(R.hi - R.lo)))
    assert snap.distinct_pairs == 0


def test_queried_pairs_are_proper_subset_on_random_instance():
    mdp, R, r_true = random_boxed_instance(6, 5, 3)
    session = ElicitationSession(
        mdp, R, strategy="cs", solver_mode="exact", user=SimulatedUser(r_true),
        tau_fraction=1e-3,
    )
    run_elicitation(session)
    assert session.terminated in ("regret_threshold", "resolved")
    assert len(session.queried_pairs) < mdp.n_pairs


def test_recompute_stride_reuses_stale_policy():
    calls = {"n": 0}
    real = elicitation_mod.minimax_regret

    def counting(*args, **kwargs):
        calls["n"] += 1
        return real(*args, **kwargs)

    mdp, R, r_true = random_boxed_instance(7, 3, 2)
    session = ElicitationSession(
        mdp,
        R,
        strategy="hlg",
        solver_mode="exact",
        user=SimulatedUser(r_true),
        budget=6,
        recompute_stride=3,
    )
    elicitation_mod.minimax_regret = counting
    try:
        run_elicitation(session)
    finally:
        elicitation_mod.minimax_regret = real
    answered = len(session.query_log)
    expected = len([i for i in range(answered + 1) if i % 3 == 0])
    assert calls["n"] == expected


def test_maximin_criterion_session_runs():
    mdp, R, r_true = random_boxed_instance(8, 3, 2)
    session = ElicitationSession(
        mdp,
        R,
        criterion="maximin",
        strategy="cs",
        metric_mode="exact",
        user=SimulatedUser(r_true),
        budget=10,
    )
    trace, sol = run_elicitation(session)
    assert len(trace) == len(session.query_log) + 1
    assert hasattr(sol, "security_value")


def test_answer_after_termination_raises():
    mdp, R, r_true = random_boxed_instance(9, 3, 2)
    session = ElicitationSession(
        mdp, R, solver_mode="exact", user=SimulatedUser(r_true), budget=0
    )
    run_elicitation(session)
    with pytest.raises(SessionTerminated):
        session.answer(QueryResponse.YES)


def test_human_session_omits_true_regret():
    mdp, R, _ = random_boxed_instance(11, 3, 2)
    session = ElicitationSession(mdp, R, solver_mode="exact", budget=4)
    q = session.advance()
    assert session.trace[0].true_regret is None
    session.answer(QueryResponse.NO)
    assert session.polytope.hi[q.s, q.a] == pytest.approx(q.b)


def test_unsure_clamps_to_query_epsilon():
    mdp = one_state()
    R = RewardPolytope(np.array([[0.0, 0.2]]), np.array([[1.0, 0.4]]))
    user = SimulatedUser(r_true=np.array([[0.52, 0.3]]), epsilon=0.05)
    session = ElicitationSession(
        mdp, R, strategy="hlg", solver_mode="exact", user=user, budget=1,
        query_epsilon=0.05,
    )
    q = session.advance()
    assert (q.s, q.a) == (0, 0)  # HLG: the wider interval
    resp = simulate_response(user, q)
    assert resp is QueryResponse.UNSURE
    session.answer(resp)
    assert session.polytope.lo[0, 0] == pytest.approx(0.45)
    assert session.polytope.hi[0, 0] == pytest.approx(0.55)
