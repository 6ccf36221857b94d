"""Ground-truth world stepping, the ego's observation model, and full trials.

A trial precomputes every non-ego trajectory (they are ground-truth-aware
and oblivious to the ego): hidden entities follow their site behavior from
their sampled initial states, the observed vehicle executes the optimal plan
for its true goal against those entities.  The ego then runs a 1 Hz loop of
observe -> infer -> search -> execute-1s, with collisions checked at every
physics step.

Execution semantics: the chosen macro-action's closed loop reacts to the
method's own predictions. Sampling-based methods react to every prediction
their posterior supports (above a small threshold); MAP reacts only to its
single most likely hypothesis. The ego is never given ground truth it has
not perceived.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import A_MIN, DT, STEPS_PER_CONTROL, VehicleLimits
from .inference import (
    DEFAULT_BETA, JointBelief, Priors,
    enumerate_instantiations, merge_beliefs, map_selection, run_baseline,
)
from .kinematics import BodyBox, JointState, Trajectory, VehicleState, collides
from .maneuvers import LeadCache, ManeuverError, PredictedAgent, expand
from .mcts import MctsConfig, SearchError, search
from .planner import CostWeights, hypothesis_prediction
from .roadmap import OccludedSiteDef, RoadMap
from .scenarios import Scenario, VehicleSpec, build_scenario

log = logging.getLogger(__name__)

SUPPORT_THRESHOLD = 0.01  # posterior mass below which a prediction is ignored

OUTCOME_COMPLETED = "completed"
OUTCOME_COLLISION = "collision"
OUTCOME_TIMEOUT = "timeout"


@dataclass
class BeliefSample:
    t: float
    vehicle_id: str
    p_true_z: float
    p_true_goal: float


@dataclass
class RunRecord:
    scenario_id: str
    method: str
    seed: int
    outcome: str
    duration: float
    beliefs: list[BeliefSample]
    ego_trajectory: Trajectory
    planner_log: list[str] = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return self.outcome == OUTCOME_COMPLETED

    @property
    def collided(self) -> bool:
        return self.outcome == OUTCOME_COLLISION


def scripted_entity_trajectory(road: RoadMap, site: OccludedSiteDef,
                               start: VehicleState, horizon: float,
                               vehicle_id: str) -> Trajectory:
    """Ground-truth rollforward of a hidden entity from its sampled start."""
    n = int(round(horizon / DT)) + 1
    if site.behavior.kind == "stationary" or start.speed == 0.0:
        return Trajectory(vehicle_id, DT, [start] * n)
    lane = road.lanes[site.behavior.lane]
    from .maneuvers import _chain_geometry, walk_chain

    s0, _ = lane.path.project(start.x, start.y)
    chain = walk_chain(road, lane, s0, max_len=start.speed * horizon + 10.0)
    geo = _chain_geometry(road, chain)
    states = []
    for i in range(n):
        u = start.speed * i * DT
        if u <= geo.path.length:
            (px, py), ph, _ = geo.path.frame(u)
            states.append(VehicleState((px, py), ph, start.speed, 0.0))
        else:
            (px, py), ph, _ = geo.path.frame(geo.path.length)
            states.append(VehicleState((px, py), ph, 0.0, 0.0))
    return Trajectory(vehicle_id, DT, states)


def _brake_hold(state: VehicleState, n: int, limits: VehicleLimits) -> Trajectory:
    """Straight-line emergency deceleration, then hold."""
    states = [state]
    cur = state
    for _ in range(n):
        v2 = max(cur.speed + A_MIN * DT, 0.0)
        ds = 0.5 * (cur.speed + v2) * DT
        cur = VehicleState(
            (cur.x + math.cos(cur.heading) * ds, cur.y + math.sin(cur.heading) * ds),
            cur.heading, v2, (v2 - cur.speed) / DT)
        states.append(cur)
    return Trajectory("ego", DT, states)


def _settle(traj: Trajectory, road: RoadMap) -> Trajectory:
    """Extend a plan with a comfortable braking tail so the vehicle parks.

    Plans truncate the moment the goal region is entered, possibly at speed;
    the scripted world needs a physically sensible continuation.
    """
    from .config import BRAKE_COMFORT
    last = traj.states[-1]
    if last.speed < 0.05:
        return traj
    from .maneuvers import InapplicableMacro, _chain_geometry, walk_chain

    states = list(traj.states)
    cur = last
    loc = road.locate(cur.x, cur.y, cur.heading)
    geo = None
    geo_s = 0.0
    if loc is not None:
        try:
            geo = _chain_geometry(road, walk_chain(road, loc[0], loc[1], max_len=40.0))
        except InapplicableMacro:
            geo = None
    while cur.speed > 0.05:
        v2 = max(cur.speed - BRAKE_COMFORT * DT, 0.0)
        ds = 0.5 * (cur.speed + v2) * DT
        if geo is not None and geo_s + ds <= geo.path.length:
            geo_s += ds
            (px, py), ph, _ = geo.path.frame(geo_s)
            cur = VehicleState((px, py), ph, v2, (v2 - cur.speed) / DT)
        else:
            cur = VehicleState(
                (cur.x + math.cos(cur.heading) * ds, cur.y + math.sin(cur.heading) * ds),
                cur.heading, v2, (v2 - cur.speed) / DT)
        states.append(cur)
    return Trajectory(traj.vehicle_id, traj.dt, states)


def script_all(scenario: Scenario) -> dict[str, Trajectory]:
    """Precompute all non-ego trajectories for the whole trial.

    Observed vehicles execute their scenario route (a fixed macro-action
    sequence) closed-loop against the true hidden entities; hidden entities
    follow their site behavior.  Everyone ignores the ego.
    """
    from .maneuvers import LeadCache, available_macros

    road = scenario.road
    horizon = scenario.duration + 2.0
    scripts: dict[str, Trajectory] = {}
    hidden_agents: list[PredictedAgent] = []
    for spec in scenario.hidden:
        site = road.site(spec.lane)
        traj = scripted_entity_trajectory(road, site, scenario.initial[spec.id],
                                          horizon, spec.id)
        scripts[spec.id] = traj
        hidden_agents.append(PredictedAgent(traj, spec.box))

    cache = LeadCache(road)
    cap_states = int(horizon / DT) + 1
    for spec in scenario.observed:
        states = [scenario.initial[spec.id]]
        for name in spec.route:
            if len(states) >= cap_states:
                break
            cur = states[-1]
            macros = {m.name: m for m in available_macros(road, cur)}
            if name not in macros:
                log.warning("scenario %s: route macro %s unavailable for %s; parking",
                            scenario.id, name, spec.id)
                break
            try:
                seg = expand(macros[name], cur, road, tuple(hidden_agents),
                             time_offset=len(states) - 1, limits=VehicleLimits(),
                             vehicle_id=spec.id, cache=cache, stall_ok=True)
            except ManeuverError as exc:
                log.warning("scenario %s: route macro %s failed for %s (%s)",
                            scenario.id, name, spec.id, exc)
                break
            states.extend(seg.states[1:])
        traj = _settle(Trajectory(spec.id, DT, states), road) if len(states) > 1 \
            else Trajectory(spec.id, DT, states * 2)
        scripts[spec.id] = traj
    return scripts


# ---------------------------------------------------------------------------
# observation model


def observe(world: JointState, scenario: Scenario,
            latched: frozenset[str]) -> tuple[JointState, dict[str, bool]]:
    """The ego's view of the world plus per-site visibility flags.

    Blind mode never reveals hidden entities.  Geometric mode applies the
    per-scenario rule; a latched site stays visible for the rest of the run.
    """
    ego_state = world.vehicles["ego"]
    visible = {"ego": ego_state}
    for spec in scenario.observed:
        if spec.id in world.vehicles:
            visible[spec.id] = world.vehicles[spec.id]
    flags: dict[str, bool] = {}
    for spec in scenario.hidden:
        site_id = spec.lane
        seen = site_id in latched
        if not seen and scenario.perception_mode == "geometric":
            seen = _geometric_visible(world, scenario, spec, ego_state)
        flags[site_id] = seen
        if seen and spec.id in world.vehicles:
            visible[spec.id] = world.vehicles[spec.id]
    return JointState(visible, world.timestamp), flags


def _geometric_visible(world: JointState, scenario: Scenario,
                       spec: VehicleSpec, ego: VehicleState) -> bool:
    target = world.vehicles.get(spec.id)
    if target is None:
        return False
    if scenario.id == "1":
        boxes = []
        for other in scenario.observed:
            st = world.vehicles[other.id]
            boxes.append((st.x, st.y, st.heading, 4.0, 1.8))
        return not scenario.road.occludes(ego.position, target.position, boxes)
    if scenario.id == "2":
        trigger = scenario.runtime.get("overtake_begin_x")
        return trigger is not None and ego.x >= trigger
    if scenario.id == "3":
        return not scenario.road.occludes(ego.position, target.position)
    return False


def clamp_latched_belief(belief: JointBelief, latched_idx: frozenset[int]) -> JointBelief:
    """Force presence probability 1.0 for directly perceived sites."""
    if not latched_idx:
        return belief
    keep = {key: v for key, v in belief.entries.items()
            if all(key[1][j] == 1 for j in latched_idx)}
    total = sum(keep.values())
    if total <= 0.0:
        return belief  # belief cannot represent the latched sites
    entries = {key: (keep.get(key, 0.0) / total) for key in belief.entries}
    return JointBelief(belief.vehicle_id, belief.goals, belief.zs, entries,
                       belief.beta, belief.priors, belief.likelihoods,
                       belief.completions, belief.anchor_state)


def clamp_latched_marginal(merged: dict[tuple[int, ...], float],
                           latched_idx: frozenset[int]) -> dict[tuple[int, ...], float]:
    if not latched_idx:
        return merged
    keep = {bits: p for bits, p in merged.items()
            if all(bits[j] == 1 for j in latched_idx)}
    total = sum(keep.values())
    if total <= 0.0:
        return merged
    return {bits: keep.get(bits, 0.0) / total for bits in merged}


# ---------------------------------------------------------------------------
# world stepping


def step_world(world: JointState, scripts: dict[str, Trajectory],
               ego_next: VehicleState, step_index: int,
               boxes: dict[str, BodyBox]) -> tuple[JointState, bool]:
    """Advance one physics step; returns (new world, ego collided)."""
    vehicles = {"ego": ego_next}
    for vid, traj in scripts.items():
        vehicles[vid] = traj.state_at(step_index)
    new_world = JointState(vehicles, world.timestamp + DT)
    ego_box = boxes["ego"]
    hit = False
    for vid, st in vehicles.items():
        if vid == "ego":
            continue
        if collides(ego_next, ego_box, st, boxes[vid]):
            hit = True
            break
    return new_world, hit


# ---------------------------------------------------------------------------
# per-method prediction assembly


def _latched_agents(scenario: Scenario, world: JointState,
                    latched: frozenset[str], horizon: float,
                    step: int) -> list[PredictedAgent]:
    agents = []
    for spec in scenario.hidden:
        if spec.lane in latched and spec.id in world.vehicles:
            site = scenario.road.site(spec.lane)
            traj = scripted_entity_trajectory(
                scenario.road, site, world.vehicles[spec.id], horizon, spec.id)
            agents.append(PredictedAgent(traj, spec.box, start_index=step))
    return agents


def _site_marginals(merged: dict[tuple[int, ...], float], k: int) -> list[float]:
    out = [0.0] * k
    for bits, p in merged.items():
        for j, b in enumerate(bits):
            if b:
                out[j] += p
    return out


def execution_agents(method: str, scenario: Scenario,
                     beliefs: dict[str, JointBelief],
                     merged: dict[tuple[int, ...], float],
                     latched_idx: frozenset[int],
                     latched_agents: list[PredictedAgent],
                     step: int) -> list[PredictedAgent]:
    """Predictions the executed macro reacts to (see module docstring)."""
    road = scenario.road
    agents = list(latched_agents)
    if method == "map":
        for vid in sorted(beliefs):
            belief = beliefs[vid]
            gid, z = map_selection(belief)
            completion = belief.completions.get((gid, z.bits))
            if completion is not None:
                agents.append(PredictedAgent(completion.trajectory,
                                             start_index=step))
        if beliefs:
            _, z = map_selection(beliefs[sorted(beliefs)[0]])
            for j, bit in enumerate(z.bits):
                if bit and j not in latched_idx:
                    site = road.occlusion_sites[j]
                    agents.append(PredictedAgent(
                        hypothesis_prediction(site, road),
                        BodyBox(site.footprint[0], site.footprint[1])))
        return agents
    for vid in sorted(beliefs):
        belief = beliefs[vid]
        seen = set()
        for (gid, bits), p in sorted(belief.entries.items()):
            if p < SUPPORT_THRESHOLD:
                continue
            completion = belief.completions.get((gid, bits))
            if completion is not None and id(completion) not in seen:
                seen.add(id(completion))
                agents.append(PredictedAgent(completion.trajectory,
                                             start_index=step))
    for j, p in enumerate(_site_marginals(merged, road.k)):
        if p >= SUPPORT_THRESHOLD and j not in latched_idx:
            site = road.occlusion_sites[j]
            agents.append(PredictedAgent(
                hypothesis_prediction(site, road),
                BodyBox(site.footprint[0], site.footprint[1])))
    return agents


def point_mass_belief(belief: JointBelief, gid: str,
                      z: OccludedFactorInstantiation) -> JointBelief:
    entries = {key: 0.0 for key in belief.entries}
    entries[(gid, z.bits)] = 1.0
    return JointBelief(belief.vehicle_id, belief.goals, belief.zs, entries,
                       belief.beta, belief.priors, belief.likelihoods,
                       belief.completions, belief.anchor_state)


# ---------------------------------------------------------------------------
# the control loop


def control_loop(scenario: Scenario, method: str,
                 config: Optional[MctsConfig] = None,
                 weights: CostWeights = CostWeights(),
                 beta: float = DEFAULT_BETA,
                 site_prior: Optional[float] = None,
                 limits: VehicleLimits = VehicleLimits(),
                 capture_log: bool = False) -> RunRecord:
    """Run one trial: observe / infer / search at 1 Hz, execute at 10 Hz."""
    road = scenario.road
    config = config or MctsConfig()
    ego_goal = road.goal(scenario.ego.goal_id)
    goals = scenario.non_ego_goals()
    zs = enumerate_instantiations(road.k)
    priors = Priors.uniform([g.id for g in goals], road.k,
                            scenario.site_prior if site_prior is None else site_prior)
    scripts = script_all(scenario)
    _record_overtake_trigger(scenario, scripts)
    boxes = {spec.id: spec.box for spec in scenario.vehicles}
    boxes["ego"] = BodyBox(limits.length, limits.width)

    world = JointState(dict(scenario.initial), 0.0)
    histories: dict[str, list[VehicleState]] = {v.id: [] for v in scenario.observed}
    c_star_caches: dict[str, dict] = {v.id: {} for v in scenario.observed}
    latched: frozenset[str] = frozenset()
    site_ids = [s.id for s in road.occlusion_sites]
    true_goals = {v.id: v.goal_id for v in scenario.observed}

    ego_states = [world.vehicles["ego"]]
    belief_rows: list[BeliefSample] = []
    planner_log: list[str] = []
    outcome = OUTCOME_TIMEOUT
    n_steps = int(round(scenario.duration / DT))
    exec_traj: Optional[Trajectory] = None
    exec_base = 0

    for step in range(n_steps):
        if step % STEPS_PER_CONTROL == 0:
            visible, flags = observe(world, scenario, latched)
            latched = frozenset(set(latched) | {s for s, v in flags.items() if v})
            latched_idx = frozenset(site_ids.index(s) for s in latched)
            for spec in scenario.observed:
                hist = histories[spec.id]
                while len(hist) <= step:
                    hist.append(scripts[spec.id].state_at(len(hist)))

            lead_cache = LeadCache(road)
            beliefs: dict[str, JointBelief] = {}
            for spec in scenario.observed:
                observed_traj = Trajectory(spec.id, DT, list(histories[spec.id]))
                belief = run_baseline(
                    method, observed_traj, goals, zs, priors, road,
                    true_z=scenario.true_z, true_goal=true_goals[spec.id],
                    weights=weights, beta=beta, cache=lead_cache,
                    c_star_cache=c_star_caches[spec.id], d_max=scenario.d_max)
                belief = clamp_latched_belief(belief, latched_idx)
                beliefs[spec.id] = belief
            merged = merge_beliefs([beliefs[v] for v in sorted(beliefs)])
            merged = clamp_latched_marginal(merged, latched_idx)

            t_now = round(step * DT, 3)
            for vid, belief in beliefs.items():
                p_tz = sum(p for bits, p in merged.items()
                           if bits == scenario.true_z.bits)
                p_tg = belief.goal_marginal().get(true_goals[vid], 0.0)
                belief_rows.append(BeliefSample(t_now, vid, p_tz, p_tg))

            lat_agents = _latched_agents(scenario, world, latched,
                                         scenario.duration - step * DT + 2.0, step)
            search_beliefs = beliefs
            search_merged = merged
            if method == "map" and beliefs:
                search_beliefs = {}
                for vid, belief in beliefs.items():
                    gid, zsel = map_selection(belief)
                    search_beliefs[vid] = point_mass_belief(belief, gid, zsel)
                _, zsel = map_selection(beliefs[sorted(beliefs)[0]])
                search_merged = {bits: (1.0 if bits == zsel.bits else 0.0)
                                 for bits in merged}

            rng = np.random.default_rng(scenario.seed * 100003 + step)
            ego_state = world.vehicles["ego"]
            try:
                report = search(JointState({"ego": ego_state}, world.timestamp),
                                "ego", search_beliefs, search_merged, ego_goal,
                                config, road, weights, rng=rng,
                                latched_bits=latched_idx,
                                extra_agents=tuple(lat_agents),
                                limits=limits, lead_cache=lead_cache,
                                time_base=step)
                macro = report.macro
                if capture_log:
                    planner_log.append(f"t={t_now:.1f} " + "; ".join(report.log_lines()))
            except SearchError:
                macro = None

            exec_agents = execution_agents(method, scenario, beliefs, merged,
                                           latched_idx, lat_agents, step)
            exec_traj = None
            if macro is not None:
                try:
                    exec_traj = expand(macro, ego_state, road, exec_agents,
                                       time_offset=step, goal=ego_goal,
                                       limits=limits, vehicle_id="ego",
                                       cache=lead_cache)
                except ManeuverError:
                    exec_traj = None
            if exec_traj is None or len(exec_traj.states) < 2:
                exec_traj = _brake_hold(ego_state, STEPS_PER_CONTROL, limits)
            exec_base = step

        ego_next = exec_traj.state_at(step - exec_base + 1)
        world, hit = step_world(world, scripts, ego_next, step + 1, boxes)
        ego_states.append(ego_next)
        if hit:
            outcome = OUTCOME_COLLISION
            break
        if ego_goal.contains(ego_next.x, ego_next.y):
            outcome = OUTCOME_COMPLETED
            break

    duration = (len(ego_states) - 1) * DT
    return RunRecord(scenario.id, method, scenario.seed, outcome, duration,
                     belief_rows, Trajectory("ego", DT, ego_states), planner_log)


def _record_overtake_trigger(scenario: Scenario, scripts: dict[str, Trajectory]):
    """Scenario 2's perception rule latches where the overtake began."""
    if scenario.id != "2" or not scenario.observed:
        return
    vid = scenario.observed[0].id
    lane = scenario.road.lanes["l1"]
    traj = scripts[vid]
    s, lat = lane.path.project_many(traj.positions())
    off = np.nonzero(np.abs(lat) > 0.3)[0]
    if len(off):
        scenario.runtime["overtake_begin_x"] = float(traj.states[int(off[0])].x)


def run_trial(scenario_or_id, method: str, seed: Optional[int] = None,
              perception_mode: str = "blind",
              config: Optional[MctsConfig] = None,
              weights: CostWeights = CostWeights(),
              beta: float = DEFAULT_BETA,
              site_prior: Optional[float] = None,
              capture_log: bool = False) -> RunRecord:
    """Build (or accept) a scenario and run one full trial."""
    if isinstance(scenario_or_id, Scenario):
        scenario = scenario_or_id
    else:
        if seed is None:
            raise ValueError("seed required when passing a scenario id")
        scenario = build_scenario(scenario_or_id, seed, perception_mode)
    return control_loop(scenario, method, config=config, weights=weights,
                        beta=beta, site_prior=site_prior, capture_log=capture_log)


# ---------------------------------------------------------------------------
# CSV serialization


BELIEF_HEADER = ["t", "method", "vehicle_id", "p_true_z", "p_true_goal"]
OUTCOME_HEADER = ["scenario", "method", "seed", "outcome", "duration_s"]


def write_beliefs(records: list[RunRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BELIEF_HEADER)
        for rec in records:
            for row in rec.beliefs:
                w.writerow([f"{row.t:.1f}", rec.method, row.vehicle_id,
                            f"{row.p_true_z:.6f}", f"{row.p_true_goal:.6f}"])


def write_outcomes(records: list[RunRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(OUTCOME_HEADER)
        for rec in records:
            w.writerow([rec.scenario_id, rec.method, rec.seed, rec.outcome,
                        f"{rec.duration:.1f}"])
