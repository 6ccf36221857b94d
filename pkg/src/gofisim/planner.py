"""Trajectory cost and optimal macro-sequence planning.

plan_optimal is an A*/branch-and-bound search over macro-action sequences of
bounded depth.  Node expansion is the same closed-loop `expand` used
everywhere else, so planned costs are exactly the costs of executable
trajectories.  The admissible bound is the time term alone (straight-line
distance at the speed cap); the other cost terms are nonnegative, so pruning
on it never discards an optimal completion.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .config import DT, VehicleLimits
from .kinematics import BodyBox, Trajectory, VehicleState, concat, trajectory_collision
from .maneuvers import (
    InapplicableMacro, LeadCache, MacroAction, ManeuverError, PredictedAgent,
    available_macros, expand, walk_chain,
)
from .roadmap import GoalDef, OccludedSiteDef, RoadMap

D_MAX = 4                   # macro-sequence depth bound
PREDICTION_HORIZON = 60.0   # occluded-entity prediction length, s
MAX_EXPANSIONS = 20000      # hard guard against runaway searches


class PlanningError(Exception):
    pass


class GoalUnreachable(PlanningError):
    """No macro sequence of length <= d_max reaches the goal region."""


@dataclass(frozen=True)
class CostWeights:
    w_time: float = 1.0
    w_accel: float = 0.1
    w_jerk: float = 0.05
    w_curvature: float = 0.05

    def __post_init__(self):
        vals = (self.w_time, self.w_accel, self.w_jerk, self.w_curvature)
        if any(v < 0 for v in vals):
            raise ValueError("cost weights must be nonnegative")
        if all(v == 0 for v in vals):
            raise ValueError("cost weights must not all be zero")


@dataclass(frozen=True)
class PlanResult:
    trajectory: Trajectory
    cost: float
    macro_sequence: tuple[MacroAction, ...]

    @property
    def macro_names(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.macro_sequence)


def cost_of(traj: Trajectory, weights: CostWeights) -> float:
    """w_time*duration + means of |accel|, |jerk|, |curvature| over the trajectory."""
    if len(traj.states) < 2:
        raise ValueError("cost needs a trajectory of >= 2 states")
    states = traj.states
    dt = traj.dt
    duration = (len(states) - 1) * dt

    accel_sum = 0.0
    for st in states:
        accel_sum += abs(st.acceleration)
    mean_accel = accel_sum / len(states)

    jerk_sum = 0.0
    for a, b in zip(states, states[1:]):
        jerk_sum += abs(b.acceleration - a.acceleration) / dt
    mean_jerk = jerk_sum / (len(states) - 1)

    curv_sum = 0.0
    curv_n = 0
    for a, b in zip(states, states[1:]):
        ds = math.hypot(b.x - a.x, b.y - a.y)
        if ds > 0.05:
            dh = b.heading - a.heading
            dh = (dh + math.pi) % (2.0 * math.pi) - math.pi
            curv_sum += abs(dh) / ds
            curv_n += 1
    mean_curv = curv_sum / curv_n if curv_n else 0.0

    return (weights.w_time * duration + weights.w_accel * mean_accel
            + weights.w_jerk * mean_jerk + weights.w_curvature * mean_curv)


def _bits(z) -> tuple[int, ...]:
    raw = getattr(z, "bits", z)
    return tuple(int(b) for b in raw)


def hypothesis_prediction(site: OccludedSiteDef, road: RoadMap,
                          horizon: float = PREDICTION_HORIZON,
                          vehicle_id: Optional[str] = None) -> Trajectory:
    """Predicted trajectory of a hypothesized occluded entity.

    Stationary sites repeat their pose; constant-velocity sites follow their
    lane (continuing through single-successor links) at fixed speed, holding
    the final pose if the road runs out.  Memoized per (site, horizon).
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    cache = road.__dict__.setdefault("_hyp_cache", {})
    key = (site.id, round(horizon, 2), vehicle_id)
    hit = cache.get(key)
    if hit is not None:
        return hit
    traj = _hypothesis_prediction(site, road, horizon, vehicle_id)
    cache[key] = traj
    return traj


def _hypothesis_prediction(site: OccludedSiteDef, road: RoadMap,
                           horizon: float,
                           vehicle_id: Optional[str]) -> Trajectory:
    n = int(round(horizon / DT)) + 1
    vid = vehicle_id or f"site:{site.id}"
    x, y, h = site.pose
    if site.behavior.kind == "stationary":
        state = VehicleState((x, y), h, 0.0, 0.0)
        return Trajectory(vid, DT, [state] * n)

    lane = road.lanes[site.behavior.lane]
    speed = site.behavior.speed
    s0, _ = lane.path.project(x, y)
    from .maneuvers import _chain_geometry  # shared chain-walking geometry
    chain = walk_chain(road, lane, s0, max_len=speed * horizon + 10.0)
    geo = _chain_geometry(road, chain)
    states = []
    for i in range(n):
        u = speed * i * DT
        if u <= geo.path.length:
            (px, py), ph, _ = geo.path.frame(u)
            states.append(VehicleState((px, py), ph, speed, 0.0))
        else:
            (px, py), ph, _ = geo.path.frame(geo.path.length)
            states.append(VehicleState((px, py), ph, 0.0, 0.0))
    return Trajectory(vid, DT, states)


def hypothesis_agents(road: RoadMap, z,
                      horizon: float = PREDICTION_HORIZON) -> tuple[PredictedAgent, ...]:
    """PredictedAgents for every site instantiated present in z."""
    bits = _bits(z)
    if len(bits) != road.k:
        raise ValueError(f"instantiation length {len(bits)} != map k {road.k}")
    agents = []
    for bit, site in zip(bits, road.occlusion_sites):
        if bit:
            agents.append(PredictedAgent(
                hypothesis_prediction(site, road, horizon),
                BodyBox(site.footprint[0], site.footprint[1]),
            ))
    return tuple(agents)


PLAN_COLLISION_SPEED_GATE = 0.5  # m/s; slower contact = entity ran into a standstill


def _collides_with(traj: Trajectory, box: BodyBox,
                   agents: Sequence[PredictedAgent], abs_start: int) -> bool:
    for agent in agents:
        hit = trajectory_collision(traj, box, agent.trajectory, agent.box,
                                   b_offset=abs_start - agent.start_index,
                                   hold_b=True,
                                   speed_gate=PLAN_COLLISION_SPEED_GATE)
        if hit is not None:
            return True
    return False


@dataclass(order=True)
class _Node:
    f: float
    tie: int
    names: tuple[str, ...] = field(compare=False)
    traj: Trajectory = field(compare=False)
    macros: tuple[MacroAction, ...] = field(compare=False)
    depth: int = field(compare=False)


def plan_optimal(start: VehicleState, goal: GoalDef, z, road: RoadMap,
                 weights: CostWeights = CostWeights(),
                 d_max: int = D_MAX,
                 extra_agents: Sequence[PredictedAgent] = (),
                 limits: VehicleLimits = VehicleLimits(),
                 vehicle_id: str = "veh",
                 cache: Optional[LeadCache] = None,
                 time_offset: int = 0) -> PlanResult:
    """Minimum-cost macro sequence (length <= d_max) reaching the goal region.

    Entities instantiated by z are predicted with hypothesis_prediction and
    treated as traffic: expansions yield to them and colliding expansions are
    discarded.  Ties in cost break by lexicographic macro-name order.
    time_offset is the absolute physics step of `start` (aligns predictions).
    """
    if not any(g.id == goal.id for g in road.goals):
        raise PlanningError(f"goal '{goal.id}' is not defined on this map")
    agents = tuple(hypothesis_agents(road, z)) + tuple(extra_agents)
    if cache is None:
        cache = LeadCache(road)
    box = BodyBox(limits.length, limits.width)

    def h_time(state: VehicleState) -> float:
        d = math.hypot(state.x - goal.location[0], state.y - goal.location[1])
        return weights.w_time * max(d - goal.radius, 0.0) / limits.v_max

    if goal.contains(start.x, start.y):
        # trivial completion: already in the goal region
        ahead = VehicleState(
            (start.x + math.cos(start.heading) * start.speed * DT,
             start.y + math.sin(start.heading) * start.speed * DT),
            start.heading, start.speed, 0.0)
        traj = Trajectory(vehicle_id, DT, [start, ahead])
        return PlanResult(traj, cost_of(traj, weights), ())

    root = Trajectory(vehicle_id, DT, [start])
    counter = itertools.count()
    heap = [_Node(h_time(start), next(counter), (), root, (), 0)]
    best: Optional[PlanResult] = None
    best_names: Optional[tuple[str, ...]] = None
    expansions = 0

    while heap:
        node = heapq.heappop(heap)
        if best is not None and node.f >= best.cost:
            break
        state = node.traj.states[-1]
        for macro in available_macros(road, state):
            expansions += 1
            if expansions > MAX_EXPANSIONS:
                raise PlanningError("search expansion budget exhausted")
            abs_start = time_offset + len(node.traj) - 1
            try:
                seg = expand(macro, state, road, agents,
                             time_offset=abs_start, goal=goal,
                             limits=limits, vehicle_id=vehicle_id, cache=cache)
            except ManeuverError:
                continue
            if len(seg.states) < 2:
                continue
            if _collides_with(seg, box, agents, abs_start):
                continue
            traj = concat(node.traj, seg)
            names = node.names + (macro.name,)
            if goal.contains(traj.states[-1].x, traj.states[-1].y):
                cost = cost_of(traj, weights)
                if (best is None or cost < best.cost
                        or (cost == best.cost and names < best_names)):
                    best = PlanResult(traj, cost, node.macros + (macro,))
                    best_names = names
                continue
            depth = node.depth + 1
            if depth >= d_max:
                continue
            f = weights.w_time * traj.duration + h_time(traj.states[-1])
            if best is not None and f >= best.cost:
                continue
            heapq.heappush(heap, _Node(f, next(counter), names, traj,
                                       node.macros + (macro,), depth))

    if best is None:
        raise GoalUnreachable(
            f"goal '{goal.id}' unreachable within {d_max} macro-actions")
    return best


def enumerate_plans(start: VehicleState, goal: GoalDef, z, road: RoadMap,
                    weights: CostWeights = CostWeights(),
                    d_max: int = D_MAX,
                    extra_agents: Sequence[PredictedAgent] = (),
                    limits: VehicleLimits = VehicleLimits(),
                    vehicle_id: str = "veh",
                    time_offset: int = 0) -> list[tuple[tuple[str, ...], float]]:
    """Exhaustive DFS over all macro sequences (<= d_max) that reach the goal.

    Independent oracle for plan_optimal: no pruning beyond depth, shares only
    the expansion code path.  Returns (macro names, cost) for every feasible
    plan, sorted by (cost, names).
    """
    agents = tuple(hypothesis_agents(road, z)) + tuple(extra_agents)
    cache = LeadCache(road)
    box = BodyBox(limits.length, limits.width)
    found: list[tuple[tuple[str, ...], float]] = []

    def rec(traj: Trajectory, names: tuple[str, ...], depth: int):
        state = traj.states[-1]
        for macro in available_macros(road, state):
            abs_start = time_offset + len(traj) - 1
            try:
                seg = expand(macro, state, road, agents,
                             time_offset=abs_start, goal=goal,
                             limits=limits, vehicle_id=vehicle_id, cache=cache)
            except ManeuverError:
                continue
            if len(seg.states) < 2:
                continue
            if _collides_with(seg, box, agents, abs_start):
                continue
            whole = concat(traj, seg)
            seq = names + (macro.name,)
            if goal.contains(whole.states[-1].x, whole.states[-1].y):
                found.append((seq, cost_of(whole, weights)))
            elif depth + 1 < d_max:
                rec(whole, seq, depth + 1)

    rec(Trajectory(vehicle_id, DT, [start]), (), 0)
    return sorted(found, key=lambda item: (item[1], item[0]))
