"""Acceptance suite: one test per stated criterion, tolerances pinned.

The trend criteria share a single 20-seed sweep (session fixture, run in
parallel workers).  Each test prints a PASS line so a verbose run reads as a
criterion checklist.
"""

import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

from gofisim.cli import oracle_astar_enum, oracle_bayes_table, oracle_mcts_dp
from gofisim.config import DT
from gofisim.inference import (
    OccludedFactorInstantiation, Priors, enumerate_instantiations, gofi,
    marginal_z, merge_beliefs, run_baseline,
)
from gofisim.kinematics import Trajectory, VehicleState
from gofisim.mcts import SearchNode, backup, sample_determinization
from gofisim.planner import GoalUnreachable, plan_optimal
from gofisim.roadmap import load_map
from gofisim.scenarios import build_scenario, map_path
from gofisim.simulator import run_trial, script_all

SEEDS = range(20)
SCENARIOS = ("1", "2", "3", "4")


def _ok(line):
    print(f"PASS: {line}")


def bundled(name):
    import importlib.resources

    with importlib.resources.as_file(map_path(name)) as p:
        return load_map(p)


# ---------------------------------------------------------------------------
# shared sweep


def _trial(args):
    sid, method, seed, perception = args
    rec = run_trial(sid, method, seed=seed, perception_mode=perception)
    return (sid, method, seed, perception, rec.outcome,
            [(b.t, b.p_true_z, b.p_true_goal) for b in rec.beliefs])


@pytest.fixture(scope="session")
def sweep():
    tasks = []
    for sid in SCENARIOS:
        for method in ("gofi", "gr_only", "map", "goal_oracle", "of_oracle"):
            for seed in SEEDS:
                tasks.append((sid, method, seed, "blind"))
    for sid in ("2v", "4v"):
        for seed in SEEDS:
            tasks.append((sid, "gofi", seed, "blind"))
    for sid in ("1", "2", "3"):
        for method in ("gofi", "map"):
            for seed in SEEDS:
                tasks.append((sid, method, seed, "geometric"))
    results = {}
    with ProcessPoolExecutor(max_workers=2) as pool:
        for out in pool.map(_trial, tasks, chunksize=4):
            sid, method, seed, perception, outcome, series = out
            results[(sid, method, seed, perception)] = (outcome, series)
    return results


def seed_mean_curve(sweep, sid, method, col, perception="blind"):
    """Per-timestep mean over seeds, shorter runs padded by their final value."""
    series = [sweep[(sid, method, seed, perception)][1] for seed in SEEDS]
    horizon = max(len(s) for s in series)
    rows = []
    for s in series:
        vals = [row[col] for row in s]
        vals = vals + [vals[-1]] * (horizon - len(vals))
        rows.append(vals)
    return np.asarray(rows).mean(axis=0)


def mean_final(sweep, sid, method, col, perception="blind"):
    vals = [sweep[(sid, method, seed, perception)][1][-1][col] for seed in SEEDS]
    return float(np.mean(vals))


def collision_free(sweep, sid, method, perception="blind"):
    outs = [sweep[(sid, method, seed, perception)][0] for seed in SEEDS]
    return float(np.mean([o != "collision" for o in outs]))


# ---------------------------------------------------------------------------
# 1-6: inference correctness


def test_criterion_01_posterior_normalization():
    worst = 0.0
    for sid in SCENARIOS:
        sc = build_scenario(sid, 3)
        scripts = script_all(sc)
        n1 = scripts["n1"]
        goals = sc.non_ego_goals()
        zs = enumerate_instantiations(sc.road.k)
        priors = Priors.uniform([g.id for g in goals], sc.road.k, 0.1)
        for upto in (1, 40, 90):
            obs = Trajectory("n1", DT, [n1.state_at(i) for i in range(upto)])
            for method in ("gofi", "gr_only", "of_oracle", "goal_oracle"):
                belief = run_baseline(method, obs, goals, zs, priors, sc.road,
                                      true_z=sc.true_z, true_goal="g1", d_max=5)
                worst = max(worst, abs(sum(belief.entries.values()) - 1.0))
    assert worst <= 1e-9
    _ok(f"criterion 1: posterior normalization within 1e-9 (worst {worst:.2e})")


def test_criterion_02_chain_rule_1000_tables():
    from gofisim.inference import JointBelief, conditional_goal

    rng = np.random.default_rng(11)
    zs = enumerate_instantiations(1)
    priors = Priors.uniform(["g1", "g2"], 1, 0.1)
    worst = 0.0
    for _ in range(1000):
        raw = {(g, z.bits): rng.uniform(1e-6, 1.0)
               for g in ("g1", "g2") for z in zs}
        total = sum(raw.values())
        entries = {k: v / total for k, v in raw.items()}
        belief = JointBelief("v", ("g1", "g2"), zs, entries, 1.0, priors)
        marg = marginal_z(belief)
        for z in zs:
            cond = conditional_goal(belief, z)
            for g in ("g1", "g2"):
                err = abs(belief.entries[(g, z.bits)] - marg[z.bits] * cond[g])
                worst = max(worst, err)
    assert worst <= 1e-12
    _ok(f"criterion 2: chain-rule reconstruction on 1000 tables (worst {worst:.2e})")


def test_criterion_03_bayes_oracle_table():
    fixture = oracle_bayes_table()
    zs = enumerate_instantiations(1)
    priors = Priors.uniform(["g1", "g2"], 1, fixture["site_prior"])
    raw = {}
    for key, l in fixture["likelihood"].items():
        g, zbit = key.split("|z")
        z = zs[int(zbit)]
        raw[(g, z.bits)] = l * priors.goal_prior[g] * priors.z_prior(z)
    total = sum(raw.values())
    worst = 0.0
    for key, want in fixture["posterior"].items():
        g, zbit = key.split("|z")
        got = raw[(g, (int(zbit),))] / total
        worst = max(worst, abs(got - want))
    assert worst <= 1e-12
    _ok(f"criterion 3: Bayes table matches hand normalization (worst {worst:.2e})")


def test_criterion_04_confounding_inequality():
    fixture = oracle_bayes_table()
    post = {(k.split("|z")[0], int(k.split("|z")[1])): v
            for k, v in fixture["posterior"].items()}
    pg = {g: post[(g, 0)] + post[(g, 1)] for g in ("g1", "g2")}
    pz = {z: post[("g1", z)] + post[("g2", z)] for z in (0, 1)}
    tv = 0.5 * sum(abs(post[(g, z)] - pg[g] * pz[z])
                   for g in ("g1", "g2") for z in (0, 1))
    assert tv > 0.01
    _ok(f"criterion 4: joint vs product-of-marginals TV = {tv:.4f} > 0.01")


def test_criterion_05_merge_commutativity_100_pairs():
    from gofisim.inference import JointBelief

    rng = np.random.default_rng(23)
    zs = enumerate_instantiations(1)
    priors = Priors.uniform(["g1", "g2"], 1, 0.1)

    def random_belief():
        raw = {(g, z.bits): rng.uniform(1e-3, 1.0)
               for g in ("g1", "g2") for z in zs}
        total = sum(raw.values())
        return JointBelief("v", ("g1", "g2"), zs,
                           {k: v / total for k, v in raw.items()}, 1.0, priors)

    worst = 0.0
    for _ in range(100):
        a, b = random_belief(), random_belief()
        ab = merge_beliefs([a, b])
        ba = merge_beliefs([b, a])
        worst = max(worst, max(abs(ab[k] - ba[k]) for k in ab))
    assert worst <= 1e-9
    _ok(f"criterion 5: merge commutative on 100 pairs (worst {worst:.2e})")


def test_criterion_06_boltzmann_properties():
    road = bundled("toy_straight")
    start = VehicleState((2.0, 1.75), 0.0, 8.0)
    plan = plan_optimal(start, road.goal("g1"), (), road, vehicle_id="v")
    obs = Trajectory("v", DT, list(plan.trajectory.states))
    from gofisim.inference import likelihood

    l_opt = likelihood(obs, road.goal("g1"), (), road)
    assert l_opt == pytest.approx(1.0, abs=1e-9)
    # constant cost shifts cancel exactly in the exponent
    for beta in (0.5, 1.0, 2.0):
        assert math.exp(beta * ((10.0 + 7.7) - (12.0 + 7.7))) == \
            math.exp(beta * (10.0 - 12.0))
    # beta -> 0: posterior -> prior product
    blocked = bundled("toy_blocked")
    p2 = plan_optimal(VehicleState((2.0, 1.75), 0.0, 8.0), blocked.goal("g1"),
                      (0,), blocked, vehicle_id="v")
    obs2 = Trajectory("v", DT, p2.trajectory.states[:12])
    goals = [blocked.goal("g1")]
    zs = enumerate_instantiations(1)
    priors = Priors.uniform(["g1"], 1, 0.1)
    tiny = gofi(obs2, goals, zs, priors, blocked, beta=1e-9)
    tv = 0.5 * sum(abs(tiny.entries[(g.id, z.bits)]
                       - priors.goal_prior[g.id] * priors.z_prior(z))
                   for g in goals for z in zs)
    assert tv < 1e-6
    _ok(f"criterion 6: L(optimal)=1, shift-invariance exact, beta->0 TV={tv:.2e}")


# ---------------------------------------------------------------------------
# 7-8: planner


def test_criterion_07_astar_equals_enumeration():
    fixture = oracle_astar_enum()
    for case in fixture["cases"]:
        road = bundled(case["map"])
        x, y, h, v = case["start"]
        res = plan_optimal(VehicleState((x, y), h, v), road.goal(case["goal"]),
                           tuple(case["z"]), road)
        assert res.cost == case["plans"][0]["cost"], case
    _ok(f"criterion 7: plan cost equals enumeration minimum on "
        f"{len(fixture['cases'])} toy cases (exact)")


def test_criterion_08_cost_monotone_in_z():
    checked = 0
    for sid in SCENARIOS:
        sc = build_scenario(sid, 0)
        start = sc.initial["n1"]
        for g in sc.non_ego_goals():
            costs = {}
            for bits in ((0,), (1,)):
                try:
                    costs[bits] = plan_optimal(start, g, bits, sc.road,
                                               d_max=sc.d_max).cost
                except GoalUnreachable:
                    costs[bits] = math.inf
            assert costs[(1,)] >= costs[(0,)] - 1e-9, (sid, g.id, costs)
            checked += 1
    _ok(f"criterion 8: cost monotone in added entity on {checked} scenario "
        f"(goal, z) pairs")


# ---------------------------------------------------------------------------
# 9-10: mcts


def test_criterion_09_backup_matches_dp():
    fixture = oracle_mcts_dp()
    tree = fixture["leaf_rewards"]
    root = SearchNode(0)
    for _ in range(200):
        for first, leaves in sorted(tree.items()):
            child = root.child(first)
            for second, r in sorted(leaves.items()):
                backup([(root, first), (child, second)], r)
    best = min(sorted(root.q_values), key=lambda a: (-root.q_values[a], a))
    assert best == fixture["best_root_action"]
    _ok(f"criterion 9: exhaustive-visit root argmax '{best}' matches DP oracle")


def test_criterion_10_determinization_fidelity():
    from gofisim.inference import JointBelief

    road = bundled("toy_blocked")
    zs = enumerate_instantiations(1)
    priors = Priors.uniform(["g1"], 1, 0.1)
    entries = {("g1", (0,)): 0.9, ("g1", (1,)): 0.1}
    belief = JointBelief("n1", ("g1",), zs, entries, 1.0, priors)
    merged = {(0,): 0.9, (1,): 0.1}
    rng = np.random.default_rng(2024)
    n = 10000
    hits = sum(sample_determinization({"n1": belief}, merged, rng, road).z.bits[0]
               for _ in range(n))
    freq = hits / n
    assert abs(freq - 0.1) <= 0.01
    _ok(f"criterion 10: determinization frequency {freq:.4f} within 0.1 +- 0.01")


# ---------------------------------------------------------------------------
# 11-14: belief trends (20 seeds, blind)


def test_criterion_11_gofi_infers_presence(sweep):
    for sid in SCENARIOS:
        curve = seed_mean_curve(sweep, sid, "gofi", 1)
        final = mean_final(sweep, sid, "gofi", 1)
        assert final > 0.3, (sid, final)
        assert curve[-1] > curve[0], (sid, curve[0], curve[-1])
        _ok(f"criterion 11 [scenario {sid}]: mean final Pr(true z) = "
            f"{final:.3f} > 0.3, rising from {curve[0]:.3f}")


def test_criterion_12_gr_only_wrong_goal_scenario4(sweep):
    gr = mean_final(sweep, "4", "gr_only", 2)
    go = mean_final(sweep, "4", "gofi", 2)
    assert gr < 0.5, gr
    assert go > gr, (go, gr)
    _ok(f"criterion 12: scenario 4 GR-Only mean final Pr(true goal) = "
        f"{gr:.3f} < 0.5 and GOFI {go:.3f} > GR-Only")


def test_criterion_13_oracles_upper_bound(sweep):
    for sid in SCENARIOS:
        gofi_z = seed_mean_curve(sweep, sid, "gofi", 1)
        oracle_z = seed_mean_curve(sweep, sid, "goal_oracle", 1)
        n = min(len(gofi_z), len(oracle_z))
        gap_z = float((gofi_z[:n] - oracle_z[:n]).max())
        assert gap_z <= 0.05, (sid, gap_z)
        gofi_g = seed_mean_curve(sweep, sid, "gofi", 2)
        oracle_g = seed_mean_curve(sweep, sid, "of_oracle", 2)
        n = min(len(gofi_g), len(oracle_g))
        gap_g = float((gofi_g[:n] - oracle_g[:n]).max())
        assert gap_g <= 0.05, (sid, gap_g)
        _ok(f"criterion 13 [scenario {sid}]: Goal-Oracle z-curve within "
            f"{gap_z:+.3f}, OF-Oracle goal-curve within {gap_g:+.3f} (<= 0.05)")


def test_criterion_14_variants_return_to_prior(sweep):
    for sid in ("2v", "4v"):
        finals = [1.0 - sweep[(sid, "gofi", seed, "blind")][1][-1][1]
                  for seed in SEEDS]
        mean_present = float(np.mean(finals))
        assert abs(mean_present - 0.1) <= 0.05, (sid, mean_present)
        _ok(f"criterion 14 [{sid}]: mean final Pr(present) = "
            f"{mean_present:.3f} within 0.1 +- 0.05")


# ---------------------------------------------------------------------------
# 15-16: safety (20 seeds)


def test_criterion_15_gofi_highest_completion(sweep):
    for sid in SCENARIOS:
        cf = {m: collision_free(sweep, sid, m) for m in ("gofi", "gr_only", "map")}
        assert cf["gofi"] >= cf["gr_only"], (sid, cf)
        assert cf["gofi"] >= cf["map"], (sid, cf)
        _ok(f"criterion 15 [scenario {sid}]: collision-free gofi={cf['gofi']:.2f} "
            f">= gr_only={cf['gr_only']:.2f}, map={cf['map']:.2f}")


def test_criterion_16_geometric_perception(sweep):
    map_fracs = {}
    for sid in ("1", "2", "3"):
        cf = collision_free(sweep, sid, "gofi", "geometric")
        map_fracs[sid] = collision_free(sweep, sid, "map", "geometric")
        assert cf == 1.0, (sid, cf)
        _ok(f"criterion 16 [scenario {sid}]: geometric GOFI collision-free = 1.0")
    # soft target, reported not gated: MAP perfect in 1 and 3, below 1 in 2
    print(f"criterion 16 (report only): geometric MAP fractions = {map_fracs}")
