"""Acceptance suite: one test per headline criterion, each printing a
PASS/FAIL line (run with -s to watch).  Expensive elicitation batches are
shared between criteria through module-scoped fixtures.
"""

import time

import numpy as np
import pytest

from irmdp.domains import AutonomicSpec, RandomMdpSpec, gen_autonomic, gen_random
from irmdp.elicitation import (
    ElicitationSession,
    SimulatedUser,
    run_elicitation,
    simulate_response,
)
from irmdp.maximin import maximin
from irmdp.mdp import Policy, occupancy_of_policy, solve_optimal
from irmdp.regret import (
    _max_regret_exact_full,
    big_m,
    max_regret_exact,
    max_regret_relaxed,
    minimax_regret,
)
from irmdp.rewards import RewardPolytope

from oracles import max_regret_bruteforce, minimax_regret_single_lp


def report(number, name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} {detail}")
    assert ok, f"criterion {number} ({name}) failed: {detail}"


def small_instance(seed):
    n = 2 + seed % 3  # n in {2, 3, 4}, k = 2
    mdp, R, _ = gen_random(RandomMdpSpec(n=n, k=2, seed=seed, width_scale=2.0))
    return mdp, R


def random_occupancy(mdp, seed):
    rng = np.random.default_rng(seed + 10_000)
    w = rng.uniform(0.05, 1.0, size=(mdp.n, mdp.k))
    return occupancy_of_policy(mdp, Policy(w / w.sum(axis=1, keepdims=True)))


def test_criterion_1_max_regret_oracle_equivalence():
    t0 = time.time()
    worst = 0.0
    for seed in range(50):
        mdp, R = small_instance(seed)
        f = random_occupancy(mdp, seed)
        _, value = max_regret_exact(mdp, f, R)
        oracle = max_regret_bruteforce(mdp, f, R)
        worst = max(worst, abs(value - oracle))
    elapsed = time.time() - t0
    report(
        1,
        "max regret equals enumeration oracle on 50 instances",
        worst <= 1e-6 and elapsed < 60,
        f"(max |diff| {worst:.2e}, {elapsed:.1f}s)",
    )


def test_criterion_2_minimax_regret_oracle_equivalence():
    worst = 0.0
    for seed in range(25):
        mdp, R = small_instance(seed + 100)
        sol = minimax_regret(mdp, R, mode="exact")
        oracle = minimax_regret_single_lp(mdp, R)
        worst = max(worst, abs(sol.delta - oracle))
    report(
        2,
        "constraint-generation MMR equals single-LP oracle on 25 instances",
        worst <= 1e-6,
        f"(max |diff| {worst:.2e})",
    )


def test_criterion_3_anytime_behavior():
    ok = True
    details = []
    for seed in range(3):
        mdp, R, _ = gen_random(RandomMdpSpec(n=10, k=5, seed=300 + seed))
        sol = minimax_regret(mdp, R, mode="exact")
        masters = [e.master_value for e in sol.trace]
        nondecreasing = all(b >= a - 1e-9 for a, b in zip(masters, masters[1:]))
        dominates = all(e.subproblem_value >= e.master_value - 1e-7 for e in sol.trace)
        final = sol.trace[-1]
        gap = final.subproblem_value - final.master_value
        closed = gap <= 1e-6 * max(1.0, abs(final.master_value))
        ok = ok and nondecreasing and dominates and closed and sol.certified
        details.append(f"seed {seed}: iters {len(sol.trace)} gap {gap:.2e}")
    report(3, "anytime constraint generation on 10x5 instances", ok, "; ".join(details))


def test_criterion_4_relaxation_quality():
    t0 = time.time()
    errors = []
    bound_ok = True
    for seed in range(100):
        mdp, R, _ = gen_random(RandomMdpSpec(n=10, k=5, seed=400 + seed))
        f = random_occupancy(mdp, seed)
        b = big_m(mdp, R)
        _, exact = max_regret_exact(mdp, f, R, b)
        _, relaxed = max_regret_relaxed(mdp, f, R, b)
        bound_ok = bound_ok and relaxed <= exact + 1e-7
        errors.append((exact - relaxed) / exact if exact > 1e-9 else 0.0)
    elapsed = time.time() - t0
    mean_err = float(np.mean(errors))
    report(
        4,
        "LP-relaxation error on 100 10x5 instances",
        mean_err <= 0.10 and bound_ok and elapsed < 600,
        f"(mean relative error {mean_err:.3f}, lower-bound holds: {bound_ok}, {elapsed:.0f}s)",
    )


N_ELICIT = 20
ELICIT_BUDGET = 200


@pytest.fixture(scope="module")
def mmr_cs_runs():
    """Criterion 5's 20 MMR-CS sessions; reused by criteria 6, 7 and 10."""
    runs = []
    for seed in range(N_ELICIT):
        mdp, R, r_true = gen_random(RandomMdpSpec(n=10, k=5, seed=500 + seed))
        session = ElicitationSession(
            mdp,
            R,
            criterion="mmr",
            strategy="cs",
            solver_mode="relaxed",
            metric_mode="exact",
            tau_fraction=0.01,
            budget=ELICIT_BUDGET,
            user=SimulatedUser(r_true),
        )
        t0 = time.time()
        trace, _ = run_elicitation(session)
        runs.append({
            "seed": 500 + seed,
            "mdp": mdp,
            "r_true": r_true,
            "session": session,
            "trace": trace,
            "seconds": time.time() - t0,
        })
    return runs


def _first_index(trace, key, threshold):
    for snap in trace:
        if key(snap) <= threshold:
            return snap.query_index
    return None


def test_criterion_5_elicitation_effectiveness(mmr_cs_runs):
    q_cert, q_true = [], []
    total_seconds = sum(r["seconds"] for r in mmr_cs_runs)
    for run in mmr_cs_runs:
        trace = run["trace"]
        threshold = 0.01 * trace[0].max_regret
        qc = _first_index(trace, lambda m: m.max_regret, threshold)
        qt = _first_index(trace, lambda m: m.true_regret, threshold)
        q_cert.append(qc if qc is not None else ELICIT_BUDGET)
        q_true.append(qt if qt is not None else ELICIT_BUDGET)
    mean_cert = float(np.mean(q_cert))
    mean_true = float(np.mean(q_true))
    report(
        5,
        "MMR-CS drives regret to 1% of initial",
        mean_cert <= 120 and mean_true <= 60 and total_seconds < 1800,
        f"(mean queries: certified {mean_cert:.1f} <= 120, true {mean_true:.1f} <= 60, "
        f"{total_seconds:.0f}s < 1800s)",
    )


def test_criterion_6_interval_mass_ordering(mmr_cs_runs):
    wins = 0
    for run in mmr_cs_runs:
        budget = len(run["session"].query_log)
        mdp, R, r_true = gen_random(RandomMdpSpec(n=10, k=5, seed=run["seed"]))
        hlg = ElicitationSession(
            mdp,
            R,
            criterion="mmr",
            strategy="hlg",
            solver_mode="relaxed",
            metric_mode="relaxed",
            tau=0.0,
            budget=budget,
            user=SimulatedUser(r_true),
            recompute_stride=max(budget, 1),  # HLG needs no fresh policy per query
        )
        trace, _ = run_elicitation(hlg)
        chi_cs = run["trace"][-1].chi / run["trace"][0].chi
        chi_hlg = trace[-1].chi / trace[0].chi
        if chi_cs > chi_hlg:
            wins += 1
    frac = wins / len(mmr_cs_runs)
    report(
        6,
        "final interval mass: MMR-CS leaves more than MMR-HLG",
        frac >= 0.8,
        f"(CS > HLG in {wins}/{len(mmr_cs_runs)} runs)",
    )


def _true_regret_at(trace, query):
    value = trace[0].true_regret
    for snap in trace:
        if snap.query_index > query:
            break
        value = snap.true_regret
    return value


def test_criterion_7_criterion_dominance(mmr_cs_runs):
    budget = 50
    mmr_cs, mm_cs, mm_hlg = [], [], []
    for run in mmr_cs_runs:
        mmr_cs.append(_true_regret_at(run["trace"], budget))
        mdp, R, r_true = gen_random(RandomMdpSpec(n=10, k=5, seed=run["seed"]))
        for strategy, sink in (("cs", mm_cs), ("hlg", mm_hlg)):
            session = ElicitationSession(
                mdp,
                R,
                criterion="maximin",
                strategy=strategy,
                metric_mode="relaxed",
                tau=0.0,
                budget=budget,
                user=SimulatedUser(r_true),
            )
            trace, _ = run_elicitation(session)
            sink.append(trace[-1].true_regret)
    means = tuple(float(np.mean(v)) for v in (mmr_cs, mm_cs, mm_hlg))
    report(
        7,
        "true regret at 50 queries: MMR-CS beats both maximin procedures",
        means[0] < means[1] and means[0] < means[2],
        f"(MMR-CS {means[0]:.3f} vs MM-CS {means[1]:.3f}, MM-HLG {means[2]:.3f})",
    )


def test_criterion_8_maximin_box_identity():
    worst = 0.0
    for seed in range(100):
        n = 4 + seed % 7
        k = 2 + seed % 3
        mdp, R, _ = gen_random(RandomMdpSpec(n=n, k=k, seed=800 + seed, width_scale=2.0))
        sol = maximin(mdp, R)
        _, V, _ = solve_optimal(mdp, R.lo.reshape(-1))
        worst = max(worst, abs(sol.security_value - float(mdp.alpha @ V)))
    report(
        8,
        "maximin security value equals the lower-corner optimum on 100 instances",
        worst <= 1e-7,
        f"(max |diff| {worst:.2e})",
    )


def test_criterion_9_autonomic_domain():
    spec = AutonomicSpec(servers=2, units=3, demand_levels=3, seed=900)
    mdp, R, r_true = gen_autonomic(spec)
    dims_ok = mdp.n == 90 and mdp.k == 10

    bounds = big_m(mdp, R)
    solver_kwargs = {"max_iterations": 8}

    def certify(session):
        b = big_m(mdp, session.polytope)
        return _max_regret_exact_full(
            mdp, session.current_f, session.polytope, b, time_limit=45.0
        )[3]

    session = ElicitationSession(
        mdp,
        R,
        criterion="mmr",
        strategy="cs",
        solver_mode="relaxed",
        metric_mode="relaxed",
        tau=0.0,
        budget=250,
        user=SimulatedUser(r_true),
        solver_kwargs=solver_kwargs,
    )
    session.advance()
    initial_cert = certify(session)
    threshold = 0.05 * initial_cert
    cert_query = None
    while True:
        q = session.advance()
        if q is None:
            break
        session.answer(simulate_response(session.user, q))
        n_q = len(session.query_log)
        if n_q % 25 == 0:
            session.advance()  # refresh the policy before certifying
            cert = certify(session)
            if cert <= threshold:
                cert_query = n_q
                break
    mmr_cs_pairs = len(session.queried_pairs)
    coverage_ok = mmr_cs_pairs <= 0.20 * mdp.n_pairs
    cert_ok = cert_query is not None and cert_query <= 250

    mm = ElicitationSession(
        mdp,
        R,
        criterion="maximin",
        strategy="cs",
        metric_mode="relaxed",
        tau=0.0,
        budget=len(session.query_log),
        user=SimulatedUser(r_true),
    )
    run_elicitation(mm)
    spread_ok = len(mm.queried_pairs) > mmr_cs_pairs

    report(
        9,
        "autonomic domain: 90x10, focused certification, maximin spreads wider",
        dims_ok and cert_ok and coverage_ok and spread_ok,
        f"(dims 90x10: {dims_ok}; certified {0 if cert_query is None else cert_query} queries "
        f"to <=5% of {initial_cert:.1f}; MMR-CS touched {mmr_cs_pairs}/{mdp.n_pairs}, "
        f"MM-CS touched {len(mm.queried_pairs)})",
    )


def test_criterion_10_focus_histogram(mmr_cs_runs):
    fractions = [
        1.0 - len(r["session"].queried_pairs) / r["mdp"].n_pairs for r in mmr_cs_runs
    ]
    mean_unqueried = float(np.mean(fractions))
    report(
        10,
        "MMR-CS leaves most state-action pairs unqueried",
        mean_unqueried > 0.5,
        f"(mean unqueried fraction {mean_unqueried:.2f})",
    )
