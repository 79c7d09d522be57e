import json

import numpy as np
import pytest

from irmdp.domains import (
    AutonomicSpec,
    RandomMdpSpec,
    allocations,
    gen_autonomic,
    gen_random,
)
from irmdp.formats import instance_to_json
from irmdp.regret import minimax_regret


def test_random_spec_validation():
    with pytest.raises(ValueError):
        RandomMdpSpec(n=1, k=2)
    with pytest.raises(ValueError):
        RandomMdpSpec(n=3, k=2, reward_min=1.0, reward_max=1.0)


def test_random_successor_count_log2():
    mdp, _, _ = gen_random(RandomMdpSpec(n=10, k=5, seed=3))
    for s in range(10):
        for a in range(5):
            succ = {t for t, _ in mdp.transitions[s][a]}
            assert len(succ) == 4  # ceil(log2 10)


def test_random_r_true_inside_box():
    for seed in range(5):
        _, R, r_true = gen_random(RandomMdpSpec(n=6, k=3, seed=seed))
        assert np.all(r_true >= R.lo - 1e-12)
        assert np.all(r_true <= R.hi + 1e-12)


def test_random_deterministic_given_seed():
    a = gen_random(RandomMdpSpec(n=8, k=3, seed=42))
    b = gen_random(RandomMdpSpec(n=8, k=3, seed=42))
    assert json.dumps(instance_to_json(a[0], a[1], a[2])) == json.dumps(
        instance_to_json(b[0], b[1], b[2])
    )


def test_random_transitions_normalized():
    mdp, _, _ = gen_random(RandomMdpSpec(n=12, k=4, seed=9))
    sums = mdp.P.sum(axis=1)
    assert np.all(np.abs(sums - 1.0) < 1e-12)


def test_random_uniform_alpha_and_gamma():
    mdp, _, _ = gen_random(RandomMdpSpec(n=5, k=2, seed=0))
    assert np.allclose(mdp.alpha, 0.2)
    assert mdp.gamma == 0.95


def test_allocation_enumeration():
    # stars and bars: C(5, 2) = 10 allocations of <= 3 units across 2 servers
    allocs = allocations(2, 3)
    assert len(allocs) == 10
    assert all(sum(m) <= 3 for m in allocs)


def test_autonomic_paper_dimensions():
    mdp, R, r_true = gen_autonomic(AutonomicSpec(servers=2, units=3, demand_levels=3))
    assert mdp.n == 90
    assert mdp.k == 10
    assert r_true.shape == (90, 10)


def test_autonomic_action_installs_allocation():
    spec = AutonomicSpec(servers=2, units=3, demand_levels=3, seed=1)
    mdp, _, _ = gen_autonomic(spec)
    n_d = 9
    for s in range(mdp.n):
        for a in range(mdp.k):
            for t, _ in mdp.transitions[s][a]:
                assert t // n_d == a  # successor allocation equals the action


def test_autonomic_transitions_factor_demand_chains():
    rng = np.random.default_rng(4)
    chains = rng.dirichlet(np.ones(3), size=(2, 3))
    spec = AutonomicSpec(seed=4, demand_chains=chains)
    mdp, _, _ = gen_autonomic(spec)
    # state (alloc 0, demand (1, 2)); action 5
    s = 0 * 9 + (1 * 3 + 2)
    probs = dict(mdp.transitions[s][5])
    for d0 in range(3):
        for d1 in range(3):
            t = 5 * 9 + (d0 * 3 + d1)
            expected = chains[0, 1, d0] * chains[1, 2, d1]
            assert probs.get(t, 0.0) == pytest.approx(expected, abs=1e-12)


def test_autonomic_reward_decomposition():
    # kappa = 0 and constant utilities make every reward identical.
    lo = np.full((2, 4, 3), 2.0)
    spec = AutonomicSpec(kappa=0.0, utility_lo=lo, utility_hi=lo.copy(), seed=0)
    mdp, R, r_true = gen_autonomic(spec)
    assert np.allclose(r_true, 4.0)  # two servers contribute 2.0 each
    assert np.allclose(R.lo, R.hi)
    sol = minimax_regret(mdp, R)
    assert sol.delta == pytest.approx(0.0, abs=1e-6)


def test_autonomic_cost_of_taking_resource_away():
    spec = AutonomicSpec(kappa=0.5, seed=2)
    mdp, R, r_true = gen_autonomic(spec)
    allocs = allocations(2, 3)
    a_from = allocs.index((3, 0))
    a_to = allocs.index((1, 0))
    s = a_from * 9 + 0  # allocation (3,0), demand (0,0)
    width_free = R.hi[s, a_from] - R.lo[s, a_from]
    # Moving (3,0) -> (1,0) takes away 2 units: reward shifted down by kappa*2
    # relative to the same utility target reached without removal.
    s_low = a_to * 9 + 0
    shift = r_true[s_low, a_to] - r_true[s, a_to]
    assert shift == pytest.approx(0.5 * 2, abs=1e-12)
    assert width_free >= 0


def test_autonomic_r_true_in_polytope_and_deterministic():
    a = gen_autonomic(AutonomicSpec(seed=7))
    b = gen_autonomic(AutonomicSpec(seed=7))
    assert a[1].contains(a[2].reshape(-1))
    assert json.dumps(instance_to_json(*a)) == json.dumps(instance_to_json(*b))


def test_autonomic_monotonic_constraints_hold_for_r_true():
    spec = AutonomicSpec(seed=3, monotonic=True)
    mdp, R, r_true = gen_autonomic(spec)
    assert len(R.constraints) > 0
    assert R.contains(r_true.reshape(-1))


def test_autonomic_rejects_bad_chains():
    with pytest.raises(ValueError):
        gen_autonomic(AutonomicSpec(demand_chains=np.ones((2, 3, 3))))


def test_autonomic_rejects_infeasible_monotone_bounds():
    # An early entry forced above every later entry's upper bound cannot be
    # repaired into a monotone table.
    lo = np.zeros((2, 4, 3))
    hi = np.ones((2, 4, 3))
    lo[0, 0, 0] = 5.0
    hi[0, 0, 0] = 6.0
    with pytest.raises(ValueError):
        gen_autonomic(AutonomicSpec(utility_lo=lo, utility_hi=hi, monotonic=True, seed=0))
