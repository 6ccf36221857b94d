import importlib.resources
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gofisim.config import DT
from gofisim.inference import (
    JointBelief, OccludedFactorInstantiation, Priors, conditional_goal,
    enumerate_instantiations, gofi, likelihood, map_selection, marginal_z,
    merge_beliefs, run_baseline,
)
from gofisim.kinematics import Trajectory, VehicleState
from gofisim.planner import CostWeights, plan_optimal
from gofisim.roadmap import load_map
from gofisim.scenarios import map_path


def bundled(name):
    with importlib.resources.as_file(map_path(name)) as p:
        return load_map(p)


def belief_from_table(table, goals=("g1", "g2"), site_prior=0.1):
    """Build a JointBelief directly from an unnormalized weight table."""
    zs = enumerate_instantiations(1)
    priors = Priors.uniform(list(goals), 1, site_prior)
    raw = {(g, z.bits): table[(g, z.bits[0])] * priors.goal_prior[g] * priors.z_prior(z)
           for g in goals for z in zs}
    total = sum(raw.values())
    entries = {k: v / total for k, v in raw.items()}
    return JointBelief("v", tuple(goals), zs, entries, 1.0, priors,
                       {k: table[(k[0], k[1][0])] for k in raw})


SPEC_TABLE = {("g1", 0): 0.2, ("g1", 1): 1.0, ("g2", 0): 0.2, ("g2", 1): 0.2}


def hand_normalized(table=SPEC_TABLE, site_prior=0.1):
    goal_prior = 0.5
    raw = {}
    for (g, z), l in table.items():
        pz = site_prior if z else 1.0 - site_prior
        raw[(g, z)] = l * goal_prior * pz
    total = sum(raw.values())
    return {k: v / total for k, v in raw.items()}


def test_instantiation_enumeration_all_zeros_first():
    zs = enumerate_instantiations(2)
    assert [z.bits for z in zs] == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_priors_product_form():
    p = Priors.uniform(["a", "b"], 2, 0.1)
    z = OccludedFactorInstantiation((1, 0))
    assert p.z_prior(z) == pytest.approx(0.1 * 0.9)


def test_bayes_table_matches_hand_normalization():
    belief = belief_from_table(SPEC_TABLE)
    want = hand_normalized()
    for (g, z), p in want.items():
        assert belief.entries[(g, (z,))] == pytest.approx(p, abs=1e-12)


def test_posterior_normalization_on_table():
    belief = belief_from_table(SPEC_TABLE)
    assert sum(belief.entries.values()) == pytest.approx(1.0, abs=1e-9)


def test_marginal_is_column_sum():
    belief = belief_from_table(SPEC_TABLE)
    want = hand_normalized()
    marg = marginal_z(belief)
    for zbit in (0, 1):
        col = want[("g1", zbit)] + want[("g2", zbit)]
        assert marg[(zbit,)] == pytest.approx(col, abs=1e-12)
    assert sum(marg.values()) == pytest.approx(1.0, abs=1e-12)


def test_conditional_ratios_match_hand_table():
    belief = belief_from_table(SPEC_TABLE)
    want = hand_normalized()
    cond = conditional_goal(belief, (1,))
    colsum = want[("g1", 1)] + want[("g2", 1)]
    assert cond["g1"] == pytest.approx(want[("g1", 1)] / colsum, abs=1e-12)
    assert sum(cond.values()) == pytest.approx(1.0, abs=1e-12)


def test_chain_rule_reconstruction_randomized():
    rng = np.random.default_rng(7)
    for _ in range(200):
        table = {("g1", 0): rng.uniform(1e-6, 1), ("g1", 1): rng.uniform(1e-6, 1),
                 ("g2", 0): rng.uniform(1e-6, 1), ("g2", 1): rng.uniform(1e-6, 1)}
        belief = belief_from_table(table)
        marg = marginal_z(belief)
        for z in belief.zs:
            cond = conditional_goal(belief, z)
            for g in belief.goals:
                assert belief.entries[(g, z.bits)] == pytest.approx(
                    marg[z.bits] * cond[g], abs=1e-12)


def test_conditional_zero_marginal_raises():
    table = {("g1", 0): 1.0, ("g1", 1): 0.0, ("g2", 0): 1.0, ("g2", 1): 0.0}
    belief = belief_from_table(table)
    with pytest.raises(ZeroDivisionError):
        conditional_goal(belief, (1,))


def test_map_selection_on_spec_table():
    # z marginal favors no-factor (0.75 vs 0.25); conditional ties break to g1
    belief = belief_from_table(SPEC_TABLE)
    g, z = map_selection(belief)
    assert (g, z.bits) == ("g1", (0,))


def test_map_selection_concentrated():
    table = {("g1", 0): 0.0, ("g1", 1): 5.0, ("g2", 0): 0.0, ("g2", 1): 0.0}
    belief = belief_from_table(table)
    g, z = map_selection(belief)
    assert (g, z.bits) == ("g1", (1,))


def test_confounding_joint_differs_from_marginal_product():
    # total variation between the joint and the product of its marginals
    belief = belief_from_table(SPEC_TABLE)
    marg_z = marginal_z(belief)
    marg_g = belief.goal_marginal()
    tv = 0.5 * sum(abs(belief.entries[(g, z.bits)] - marg_g[g] * marg_z[z.bits])
                   for g in belief.goals for z in belief.zs)
    assert tv > 0.01


def test_merge_single_belief_is_identity():
    belief = belief_from_table(SPEC_TABLE)
    merged = merge_beliefs([belief])
    marg = marginal_z(belief)
    for bits, p in merged.items():
        assert p == pytest.approx(marg[bits], abs=1e-12)


def test_merge_two_identical_beliefs_strengthens():
    table = {("g1", 0): 0.2, ("g1", 1): 0.9, ("g2", 0): 0.2, ("g2", 1): 0.9}
    belief = belief_from_table(table)
    single = marginal_z(belief)[(1,)]
    double = merge_beliefs([belief, belief])[(1,)]
    assert 1.0 > double > single


def test_merge_order_independent_randomized():
    rng = np.random.default_rng(3)
    for _ in range(100):
        t1 = {(g, z): rng.uniform(1e-3, 1) for g in ("g1", "g2") for z in (0, 1)}
        t2 = {(g, z): rng.uniform(1e-3, 1) for g in ("g1", "g2") for z in (0, 1)}
        b1, b2 = belief_from_table(t1), belief_from_table(t2)
        ab = merge_beliefs([b1, b2])
        ba = merge_beliefs([b2, b1])
        for bits in ab:
            assert ab[bits] == pytest.approx(ba[bits], abs=1e-9)


def test_merge_rejects_mismatched_support():
    b1 = belief_from_table(SPEC_TABLE)
    zs = enumerate_instantiations(2)
    priors = Priors.uniform(["g1"], 2, 0.1)
    entries = {("g1", z.bits): 0.25 for z in zs}
    b2 = JointBelief("w", ("g1",), zs, entries, 1.0, priors)
    with pytest.raises(ValueError):
        merge_beliefs([b1, b2])


# --- likelihood against the real planner -----------------------------------


@pytest.fixture(scope="module")
def straight_road():
    return bundled("toy_straight")


def optimal_observation(road, goal_id="g1", upto=None):
    start = VehicleState((2.0, 1.75), 0.0, 8.0)
    plan = plan_optimal(start, road.goal(goal_id), (), road, vehicle_id="v")
    states = plan.trajectory.states if upto is None else plan.trajectory.states[:upto]
    return Trajectory("v", DT, list(states))


def test_likelihood_one_when_observed_is_optimal(straight_road):
    obs = optimal_observation(straight_road)
    val = likelihood(obs, straight_road.goal("g1"), (), straight_road)
    assert val == pytest.approx(1.0, abs=1e-9)


def test_likelihood_near_one_for_optimal_prefix(straight_road):
    # replanning from mid-plan introduces only chunk-boundary float jitter
    obs = optimal_observation(straight_road, upto=40)
    val = likelihood(obs, straight_road.goal("g1"), (), straight_road)
    assert val == pytest.approx(1.0, abs=0.01)
    assert val <= 1.0 + 1e-9


def test_likelihood_direct_boltzmann_value():
    # L = exp(beta (c* - c+)); with c*=10 and c+=12 at beta=1, e^-2
    assert math.exp(1.0 * (10.0 - 12.0)) == pytest.approx(0.13533528, abs=1e-7)


def test_likelihood_cost_shift_invariance():
    beta = 1.3
    base = math.exp(beta * (10.0 - 12.0))
    shifted = math.exp(beta * ((10.0 + 55.5) - (12.0 + 55.5)))
    assert shifted == base  # exact


def test_likelihood_unreachable_goal_gives_zero():
    road = bundled("toy_junction")
    lane = road.lanes["out_l"]
    (x, y), h, _ = lane.path.frame(5.0)
    obs = Trajectory("v", DT, [VehicleState((x, y), h, 5.0)] * 2)
    assert likelihood(obs, road.goal("gs"), (), road) == 0.0


def test_gofi_flat_likelihood_returns_prior(straight_road):
    # a single-state observation carries no evidence: posterior == prior
    obs = Trajectory("v", DT, [VehicleState((2.0, 1.75), 0.0, 8.0)])
    goals = [straight_road.goal("g1")]
    zs = enumerate_instantiations(0)
    priors = Priors.uniform(["g1"], 0)
    belief = gofi(obs, goals, zs, priors, straight_road)
    assert belief.entries[("g1", ())] == pytest.approx(1.0)


def test_gofi_normalized_and_beta_zero_limit():
    road = bundled("toy_blocked")
    start = VehicleState((2.0, 1.75), 0.0, 8.0)
    plan = plan_optimal(start, road.goal("g1"), (0,), road, vehicle_id="v")
    obs = Trajectory("v", DT, plan.trajectory.states[:12])
    goals = [road.goal("g1")]
    zs = enumerate_instantiations(1)
    priors = Priors.uniform(["g1"], 1, 0.1)
    belief = gofi(obs, goals, zs, priors, road, beta=1.0)
    assert all(l > 0 for l in belief.likelihoods.values())
    assert sum(belief.entries.values()) == pytest.approx(1.0, abs=1e-9)
    tiny = gofi(obs, goals, zs, priors, road, beta=1e-9)
    tv = 0.5 * sum(abs(tiny.entries[(g.id, z.bits)]
                       - priors.goal_prior[g.id] * priors.z_prior(z))
                   for g in goals for z in zs)
    assert tv < 1e-6


def test_run_baseline_restrictions(straight_road):
    road = bundled("toy_blocked")
    start = VehicleState((2.0, 1.75), 0.0, 8.0)
    plan = plan_optimal(start, road.goal("g1"), (0,), road, vehicle_id="v")
    obs = Trajectory("v", DT, plan.trajectory.states[:12])
    goals = [road.goal("g1")]
    zs = enumerate_instantiations(1)
    priors = Priors.uniform(["g1"], 1, 0.1)
    gr = run_baseline("gr_only", obs, goals, zs, priors, road)
    assert [z.bits for z in gr.zs] == [(0,)]
    assert marginal_z(gr)[(0,)] == pytest.approx(1.0)
    of = run_baseline("of_oracle", obs, goals, zs, priors, road,
                      true_z=OccludedFactorInstantiation((1,)))
    assert [z.bits for z in of.zs] == [(1,)]
    go = run_baseline("goal_oracle", obs, goals, zs, priors, road, true_goal="g1")
    assert go.goals == ("g1",)
    for z in go.zs:
        assert conditional_goal(go, z)["g1"] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        run_baseline("nope", obs, goals, zs, priors, road)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1e-3, 1.0), min_size=4, max_size=4))
def test_random_tables_always_normalized(vals):
    table = {("g1", 0): vals[0], ("g1", 1): vals[1],
             ("g2", 0): vals[2], ("g2", 1): vals[3]}
    belief = belief_from_table(table)
    assert sum(belief.entries.values()) == pytest.approx(1.0, abs=1e-9)
    assert all(v >= 0 for v in belief.entries.values())
