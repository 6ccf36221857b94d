"""Determinized Monte Carlo Tree Search over ego macro-actions.

Each iteration samples one concrete world hypothesis from the current
beliefs (an occluded-factor instantiation, a goal per observed vehicle, and
the matching predicted trajectories) and treats it as ground truth while
descending the tree.  Nodes aggregate action values across determinizations;
selection is UCB; terminal rewards are backed up with a Q-learning style
rule: the leaf moves toward the reward, interior nodes toward the max child
value, each with step size 1/visits.

Trees are rebuilt from scratch every control step.  Within one search, ego
macro rollouts are memoized per (determinization signature, macro path):
they are deterministic given both, and only a handful of distinct
determinizations exist, so most iterations replay cached segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import DT, VehicleLimits
from .inference import JointBelief, OccludedFactorInstantiation, conditional_goal
from .kinematics import BodyBox, JointState, Trajectory, VehicleState, concat
from .maneuvers import (
    LeadCache, MacroAction, ManeuverError, PredictedAgent, available_macros, expand,
)
from .planner import CostWeights, cost_of, hypothesis_agents
from .roadmap import GoalDef, RoadMap

IDLE_HORIZON = 60.0  # reference duration for scaling goal rewards, s


class SearchError(Exception):
    pass


@dataclass(frozen=True)
class MctsConfig:
    iterations: int = 100
    d_max: int = 5
    r_coll: float = -1.0
    r_term: float = -0.3
    ucb_c: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1 or self.d_max < 1:
            raise ValueError("iterations and d_max must be >= 1")
        if self.ucb_c <= 0:
            raise ValueError("ucb_c must be positive")
        if self.r_coll >= self.r_term:
            raise ValueError("collision reward must be below the depth-out reward")


class SearchNode:
    """One macro-history node; statistics per applicable macro."""

    __slots__ = ("state", "q_values", "visit_counts", "children", "depth")

    def __init__(self, depth: int, state: Optional[JointState] = None):
        self.state = state
        self.q_values: dict[str, float] = {}
        self.visit_counts: dict[str, int] = {}
        self.children: dict[str, "SearchNode"] = {}
        self.depth = depth

    def total_visits(self) -> int:
        return sum(self.visit_counts.values())

    def child(self, macro_name: str) -> "SearchNode":
        node = self.children.get(macro_name)
        if node is None:
            node = SearchNode(self.depth + 1)
            self.children[macro_name] = node
        return node

    def best_value(self) -> float:
        visited = [q for name, q in self.q_values.items()
                   if self.visit_counts.get(name, 0) > 0]
        return max(visited) if visited else 0.0


@dataclass(frozen=True)
class Determinization:
    z: OccludedFactorInstantiation
    goals: dict[str, str]                    # vehicle id -> sampled goal id
    agents: tuple[PredictedAgent, ...]       # everything the ego must avoid

    @property
    def signature(self) -> tuple:
        return (self.z.bits, tuple(sorted(self.goals.items())))


def _weighted_choice(rng: np.random.Generator, items: Sequence, probs: Sequence[float]):
    u = rng.random()
    acc = 0.0
    for item, p in zip(items, probs):
        acc += p
        if u <= acc:
            return item
    return items[-1]


def sample_determinization(beliefs: dict[str, JointBelief],
                           merged_z: dict[tuple[int, ...], float],
                           rng: np.random.Generator,
                           road: RoadMap,
                           latched_bits: frozenset[int] = frozenset(),
                           extra_agents: Sequence[PredictedAgent] = (),
                           time_base: int = 0) -> Determinization:
    """Draw (z, per-vehicle goals, predicted trajectories) from the beliefs.

    z comes from the merged per-instantiation posterior; each vehicle's goal
    from its conditional given z; vehicle trajectories are the optimal-plan
    completions already computed during inference (anchored at time_base).
    Hypothesized occluded entities run on the scenario clock from step 0.
    Sites whose entity has been directly perceived (latched) are supplied via
    extra_agents and excluded from hypothesis materialization.
    """
    bits_list = sorted(merged_z)
    probs = [merged_z[b] for b in bits_list]
    bits = _weighted_choice(rng, bits_list, probs)
    z = OccludedFactorInstantiation(bits)

    goals: dict[str, str] = {}
    agents: list[PredictedAgent] = list(extra_agents)
    for vid in sorted(beliefs):
        belief = beliefs[vid]
        cond = conditional_goal(belief, z.bits)
        goal_ids = sorted(cond)
        gid = _weighted_choice(rng, goal_ids, [cond[g] for g in goal_ids])
        goals[vid] = gid
        completion = belief.completions.get((gid, z.bits))
        if completion is not None:
            agents.append(PredictedAgent(completion.trajectory,
                                         start_index=time_base))
        elif belief.anchor_state is not None:
            # no feasible plan under this cell: predict the vehicle holding
            last = belief.anchor_state
            held = VehicleState(last.position, last.heading, 0.0, 0.0)
            agents.append(PredictedAgent(Trajectory(vid, DT, [held, held]),
                                         start_index=time_base))

    hyp_bits = tuple(0 if j in latched_bits else b for j, b in enumerate(z.bits))
    agents.extend(hypothesis_agents(road, hyp_bits))
    return Determinization(z, goals, tuple(agents))


def backup(path: Sequence[tuple[SearchNode, str]], reward: float) -> None:
    """Backpropagate a terminal reward along the traversed (node, macro) edges."""
    if not path:
        raise ValueError("backup needs a non-empty path")
    for i in range(len(path) - 1, -1, -1):
        node, name = path[i]
        n = node.visit_counts.get(name, 0) + 1
        node.visit_counts[name] = n
        q = node.q_values.get(name, 0.0)
        if i == len(path) - 1:
            target = reward
        else:
            target = node.children[name].best_value()
        node.q_values[name] = q + (target - q) / n
    return None


def _ucb_pick(node: SearchNode, names: Sequence[str], c: float) -> str:
    untried = [n for n in names if node.visit_counts.get(n, 0) == 0]
    if untried:
        return untried[0]
    total = max(node.total_visits(), 1)
    best_name = None
    best_score = -math.inf
    for name in names:
        n = node.visit_counts[name]
        score = node.q_values[name] + c * math.sqrt(math.log(total) / n)
        if score > best_score + 1e-15:
            best_score = score
            best_name = name
    return best_name


@dataclass
class SearchReport:
    macro: MacroAction
    root_q: dict[str, float]
    root_visits: dict[str, int]
    determinization_counts: dict[tuple, int]
    iterations: int

    def log_lines(self) -> list[str]:
        lines = [f"chosen={self.macro.name}"]
        for name in sorted(self.root_q):
            lines.append(
                f"  Q[{name}]={self.root_q[name]:+.4f} n={self.root_visits.get(name, 0)}")
        for sig, cnt in sorted(self.determinization_counts.items(), key=str):
            lines.append(f"  det {sig} x{cnt}")
        return lines


def search(root_state: JointState, ego_id: str,
           beliefs: dict[str, JointBelief],
           merged_z: dict[tuple[int, ...], float],
           ego_goal: GoalDef, config: MctsConfig, road: RoadMap,
           weights: CostWeights = CostWeights(),
           rng: Optional[np.random.Generator] = None,
           latched_bits: frozenset[int] = frozenset(),
           extra_agents: Sequence[PredictedAgent] = (),
           limits: VehicleLimits = VehicleLimits(),
           lead_cache: Optional[LeadCache] = None,
           time_base: int = 0) -> SearchReport:
    """Run k determinized iterations and return the best root macro-action.

    Terminal rewards: collision r_coll; goal reached a cost-scaled reward in
    (r_term, 0]; depth exhausted r_term.  Ties at the root break by macro
    name.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    ego0 = root_state.vehicles[ego_id]
    if lead_cache is None:
        lead_cache = LeadCache(road)
    box = BodyBox(limits.length, limits.width)
    cost_cap = weights.w_time * IDLE_HORIZON

    root = SearchNode(0, root_state)
    root_macros = {m.name: m for m in available_macros(road, ego0)}
    if not root_macros:
        raise SearchError("no applicable macro-action at the search root")

    # (det signature, macro name path) -> simulated segment
    segment_cache: dict[tuple, tuple] = {}
    det_counts: dict[tuple, int] = {}

    for _ in range(config.iterations):
        det = sample_determinization(beliefs, merged_z, rng, road,
                                     latched_bits, extra_agents, time_base)
        sig = det.signature
        det_counts[sig] = det_counts.get(sig, 0) + 1

        node = root
        ego_state = ego0
        traj = Trajectory(ego_id, DT, [ego0])
        path: list[tuple[SearchNode, str]] = []
        names_path: tuple[str, ...] = ()
        reward = None

        while True:
            if node.depth == 0:
                macros = root_macros
            else:
                macros = {m.name: m for m in available_macros(road, ego_state)}
            if not macros:
                reward = config.r_term
                break
            name = _ucb_pick(node, sorted(macros), config.ucb_c)
            path.append((node, name))
            names_path = names_path + (name,)

            key = (sig, names_path)
            hit = segment_cache.get(key)
            if hit is None:
                abs_start = time_base + len(traj) - 1
                try:
                    seg = expand(macros[name], ego_state, road, det.agents,
                                 time_offset=abs_start, goal=ego_goal,
                                 limits=limits, vehicle_id=ego_id, cache=lead_cache)
                except ManeuverError:
                    seg = None
                if seg is None or len(seg.states) < 2:
                    hit = ("dead", None, None)
                else:
                    coll = _segment_collides(seg, box, det.agents, abs_start)
                    reached = ego_goal.contains(seg.states[-1].x, seg.states[-1].y)
                    hit = ("ok", seg, (coll, reached))
                segment_cache[key] = hit
            status, seg, info = hit

            if status == "dead":
                reward = config.r_term
                break
            coll, reached = info
            traj = concat(traj, seg)
            ego_state = traj.states[-1]
            if coll:
                reward = config.r_coll
                break
            if reached:
                reward = config.r_term * min(cost_of(traj, weights) / cost_cap, 1.0)
                break
            if node.depth + 1 >= config.d_max:
                reward = config.r_term
                break
            nxt = node.child(name)
            nxt.state = JointState({ego_id: ego_state},
                                   root_state.timestamp + traj.duration)
            node = nxt

        backup(path, reward)

    visited = {n: q for n, q in root.q_values.items()
               if root.visit_counts.get(n, 0) > 0}
    if not visited:
        raise SearchError("search produced no root statistics")
    best = min(visited, key=lambda n: (-visited[n], n))
    return SearchReport(root_macros[best], dict(root.q_values),
                        dict(root.visit_counts), det_counts, config.iterations)


def _segment_collides(seg: Trajectory, box: BodyBox,
                      agents: Sequence[PredictedAgent], abs_start: int) -> bool:
    from .kinematics import trajectory_collision

    for agent in agents:
        if trajectory_collision(seg, box, agent.trajectory, agent.box,
                                b_offset=abs_start - agent.start_index,
                                hold_b=True) is not None:
            return True
    return False


def control_loop(scenario, method: str, config: Optional[MctsConfig] = None, **kw):
    """Run a full closed-loop trial (implemented in gofisim.simulator)."""
    from .simulator import control_loop as _impl

    return _impl(scenario, method, config, **kw)
