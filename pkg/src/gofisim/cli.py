"""Command-line entry point.

    gofisim run    --scenario 1,2,3 --method gofi,gr_only --seeds 20 ...
    gofisim oracle astar_enum|bayes_table|mcts_dp --out DIR

`run` executes every (scenario, method, seed) trial, writing per-scenario
belief logs plus global outcome and summary tables.  `oracle` regenerates
the independent fixtures the test suite checks the core algorithms against.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import VehicleLimits
from .inference import DEFAULT_BETA
from .mcts import MctsConfig
from .planner import CostWeights
from .scenarios import SCENARIO_IDS, build_scenario
from .simulator import (
    OUTCOME_COMPLETED, RunRecord, run_trial, write_beliefs, write_outcomes,
)

SUMMARY_HEADER = ["scenario", "method", "trials", "completed", "collisions",
                  "timeouts", "collision_free_frac", "ci_low", "ci_high"]


@dataclass
class RunConfig:
    scenarios: list[str]
    methods: list[str]
    seeds: list[int]
    out_dir: str
    perception: str = "blind"
    beta: float = DEFAULT_BETA
    site_prior: Optional[float] = None
    mcts: MctsConfig = field(default_factory=MctsConfig)
    weights: CostWeights = field(default_factory=CostWeights)
    jobs: int = 1

    def __post_init__(self):
        if not self.scenarios or not self.methods:
            raise ValueError("need at least one scenario and one method")


def bootstrap_interval(values, n_resamples: int = 1000, seed: int = 0,
                       level: float = 0.95):
    """Percentile bootstrap CI for the mean of 0/1 outcomes."""
    arr = np.asarray(values, dtype=float)
    if len(arr) == 0:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(arr), size=(n_resamples, len(arr)))
    means = arr[idx].mean(axis=1)
    lo, hi = np.quantile(means, [(1 - level) / 2, 1 - (1 - level) / 2])
    return float(lo), float(hi)


def _one_trial(args):
    sid, method, seed, perception, beta, site_prior, mcts_kw, weights_kw = args
    return run_trial(sid, method, seed=seed, perception_mode=perception,
                     config=MctsConfig(**mcts_kw), beta=beta,
                     site_prior=site_prior, weights=CostWeights(**weights_kw))


def run_sweep(cfg: RunConfig) -> tuple[list[RunRecord], list[tuple]]:
    """All trials of the sweep; returns (records, failures)."""
    tasks = []
    mcts_kw = dict(iterations=cfg.mcts.iterations, d_max=cfg.mcts.d_max,
                   r_coll=cfg.mcts.r_coll, r_term=cfg.mcts.r_term,
                   ucb_c=cfg.mcts.ucb_c, seed=cfg.mcts.seed)
    weights_kw = dict(w_time=cfg.weights.w_time, w_accel=cfg.weights.w_accel,
                      w_jerk=cfg.weights.w_jerk, w_curvature=cfg.weights.w_curvature)
    for sid in cfg.scenarios:
        for method in cfg.methods:
            for seed in cfg.seeds:
                tasks.append((sid, method, seed, cfg.perception, cfg.beta,
                              cfg.site_prior, mcts_kw, weights_kw))
    records: list[RunRecord] = []
    failures: list[tuple] = []
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            for task, result in zip(tasks, pool.map(_one_trial, tasks)):
                records.append(result)
    else:
        for task in tasks:
            try:
                records.append(_one_trial(task))
            except Exception as exc:  # pragma: no cover - diagnostic path
                failures.append((task[0], task[1], task[2], repr(exc)))
    return records, failures


def write_summary(records: list[RunRecord], path):
    import csv

    cells: dict[tuple[str, str], list[RunRecord]] = {}
    for rec in records:
        cells.setdefault((rec.scenario_id, rec.method), []).append(rec)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_HEADER)
        for (sid, method) in sorted(cells):
            recs = cells[(sid, method)]
            ok = [0.0 if r.collided else 1.0 for r in recs]
            done = sum(1 for r in recs if r.completed)
            coll = sum(1 for r in recs if r.collided)
            tout = len(recs) - done - coll
            lo, hi = bootstrap_interval(ok)
            w.writerow([sid, method, len(recs), done, coll, tout,
                        f"{np.mean(ok):.4f}", f"{lo:.4f}", f"{hi:.4f}"])


def cmd_run(cfg: RunConfig) -> int:
    records, failures = run_sweep(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_outcomes(records, os.path.join(cfg.out_dir, "outcomes.csv"))
    write_summary(records, os.path.join(cfg.out_dir, "summary.csv"))
    by_scenario: dict[str, list[RunRecord]] = {}
    for rec in records:
        by_scenario.setdefault(rec.scenario_id, []).append(rec)
    for sid, recs in sorted(by_scenario.items()):
        sub = os.path.join(cfg.out_dir, f"scenario_{sid}")
        os.makedirs(sub, exist_ok=True)
        write_beliefs(recs, os.path.join(sub, "beliefs.csv"))
    if failures:
        for sid, method, seed, err in failures:
            print(f"FAILED {sid}/{method}/seed={seed}: {err}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# oracle fixtures


def oracle_astar_enum() -> dict:
    """Exhaustive plan enumeration on the three toy maps."""
    from .inference import OccludedFactorInstantiation
    from .kinematics import VehicleState
    from .planner import enumerate_plans
    from .roadmap import load_map
    from .scenarios import map_path
    import importlib.resources

    cases = [
        ("toy_straight", "g1", (2.0, 1.75, 0.0, 8.0), ()),
        ("toy_junction", "gl", (-35.0, 0.0, 0.0, 8.0), ()),
        ("toy_junction", "gs", (-35.0, 0.0, 0.0, 8.0), ()),
        ("toy_blocked", "g1", (2.0, 1.75, 0.0, 8.0), (0,)),
        ("toy_blocked", "g1", (2.0, 1.75, 0.0, 8.0), (1,)),
    ]
    out = {"cases": []}
    for map_name, goal_id, (x, y, h, v), bits in cases:
        with importlib.resources.as_file(map_path(map_name)) as p:
            road = load_map(p)
        start = VehicleState((x, y), h, v)
        plans = enumerate_plans(start, road.goal(goal_id), bits, road)
        out["cases"].append({
            "map": map_name, "goal": goal_id, "start": [x, y, h, v],
            "z": list(bits),
            "plans": [{"macros": list(names), "cost": cost} for names, cost in plans],
        })
    return out


def oracle_bayes_table() -> dict:
    """Hand-normalized posterior for the fixed 2x2 likelihood table."""
    likelihood = {("g1", 0): 0.2, ("g1", 1): 1.0, ("g2", 0): 0.2, ("g2", 1): 0.2}
    goal_prior = {"g1": 0.5, "g2": 0.5}
    site_prior = 0.1
    raw = {}
    for (g, z), l in likelihood.items():
        pz = site_prior if z else (1.0 - site_prior)
        raw[(g, z)] = l * goal_prior[g] * pz
    total = sum(raw.values())
    post = {k: v / total for k, v in raw.items()}
    return {
        "likelihood": {f"{g}|z{z}": l for (g, z), l in likelihood.items()},
        "goal_prior": goal_prior,
        "site_prior": site_prior,
        "posterior": {f"{g}|z{z}": p for (g, z), p in post.items()},
        "z_marginal": {f"z{z}": sum(p for (g, zz), p in post.items() if zz == z)
                       for z in (0, 1)},
    }


def oracle_mcts_dp() -> dict:
    """Exact max-backup values for the deterministic two-level toy tree."""
    tree = {
        "a": {"a": -0.10, "b": -0.60},
        "b": {"a": -0.05, "b": -1.00},
        "c": {"a": -0.40, "b": -0.30},
    }
    values = {root: max(children.values()) for root, children in tree.items()}
    best = min(sorted(values), key=lambda k: (-values[k], k))
    return {"leaf_rewards": tree, "root_values": values, "best_root_action": best}


ORACLES = {
    "astar_enum": oracle_astar_enum,
    "bayes_table": oracle_bayes_table,
    "mcts_dp": oracle_mcts_dp,
}


def cmd_oracle(which: str, out_dir: str) -> int:
    if which not in ORACLES:
        print(f"unknown oracle '{which}' (have: {', '.join(sorted(ORACLES))})",
              file=sys.stderr)
        return 2
    os.makedirs(out_dir, exist_ok=True)
    data = ORACLES[which]()
    path = os.path.join(out_dir, f"{which}.json")
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------


def _parse_seeds(spec: str) -> list[int]:
    if ":" in spec:
        a, b = spec.split(":")
        return list(range(int(a), int(b)))
    if "," in spec:
        return [int(s) for s in spec.split(",")]
    return list(range(int(spec)))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gofisim",
                                 description="Driving-scenario inference and planning runs")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute scenario x method x seed trials")
    run.add_argument("--scenario", default="1,2,3,4",
                     help="comma list from {%s}" % ",".join(SCENARIO_IDS))
    run.add_argument("--method", default="gofi",
                     help="comma list from {gofi,gr_only,of_oracle,goal_oracle,map}")
    run.add_argument("--seeds", default="20",
                     help="count N (0..N-1), comma list, or a:b range")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--out", default=None,
                     help="output directory (default $GOFI_SIM_OUT or ./out)")
    run.add_argument("--perception", choices=["blind", "geometric"], default="blind")
    run.add_argument("--beta", type=float, default=DEFAULT_BETA)
    run.add_argument("--site-prior", type=float, default=None)
    run.add_argument("--mcts-iters", type=int, default=MctsConfig.iterations)
    run.add_argument("--mcts-depth", type=int, default=MctsConfig.d_max)
    run.add_argument("--ucb-c", type=float, default=MctsConfig.ucb_c)
    run.add_argument("--r-coll", type=float, default=MctsConfig.r_coll)
    run.add_argument("--r-term", type=float, default=MctsConfig.r_term)
    run.add_argument("--w-time", type=float, default=CostWeights.w_time)
    run.add_argument("--w-accel", type=float, default=CostWeights.w_accel)
    run.add_argument("--w-jerk", type=float, default=CostWeights.w_jerk)
    run.add_argument("--w-curvature", type=float, default=CostWeights.w_curvature)

    orc = sub.add_parser("oracle", help="write independent test fixtures")
    orc.add_argument("which", choices=sorted(ORACLES))
    orc.add_argument("--out", default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_default = os.environ.get("GOFI_SIM_OUT", "out")
    if args.command == "oracle":
        return cmd_oracle(args.which, args.out or out_default)
    scenarios = [s.strip() for s in args.scenario.split(",") if s.strip()]
    for sid in scenarios:
        if sid not in SCENARIO_IDS:
            print(f"unknown scenario '{sid}'", file=sys.stderr)
            return 2
    methods = [m.strip() for m in args.method.split(",") if m.strip()]
    cfg = RunConfig(
        scenarios=scenarios, methods=methods, seeds=_parse_seeds(args.seeds),
        out_dir=args.out or out_default, perception=args.perception,
        beta=args.beta, site_prior=args.site_prior,
        mcts=MctsConfig(iterations=args.mcts_iters, d_max=args.mcts_depth,
                        ucb_c=args.ucb_c, r_coll=args.r_coll, r_term=args.r_term),
        weights=CostWeights(args.w_time, args.w_accel, args.w_jerk, args.w_curvature),
        jobs=args.jobs,
    )
    return cmd_run(cfg)


if __name__ == "__main__":
    sys.exit(main())
