"""Joint goal and occluded-factor inference with determinized MCTS planning.

Subpackages:
    roadmap     lanes, goals, occlusion sites, line-of-sight tests
    kinematics  vehicle states, trajectories, collision checks
    maneuvers   macro-action library and closed-loop expansion
    planner     trajectory cost and optimal macro-sequence search
    inference   joint posteriors over goals and occluded factors
    mcts        determinized tree search over ego macro-actions
    scenarios   the four evaluation scenarios and their variants
    simulator   ground-truth stepping, observation model, full trials
    cli         `gofisim run` / `gofisim oracle`
    kernels     hot loops (compiled extension with pure-Python fallback)
"""

from .inference import (
    JointBelief, OccludedFactorInstantiation, Priors, conditional_goal,
    enumerate_instantiations, gofi, likelihood, map_selection, marginal_z,
    merge_beliefs, run_baseline,
)
from .kinematics import (
    BodyBox, JointState, Trajectory, VehicleState, collides, concat, step,
    trajectory_collision,
)
from .maneuvers import (
    MacroAction, Maneuver, PredictedAgent, VelocityProfile, applicable,
    available_macros, expand, velocity_profile,
)
from .mcts import MctsConfig, SearchNode, backup, sample_determinization, search
from .planner import (
    CostWeights, GoalUnreachable, PlanResult, cost_of, enumerate_plans,
    hypothesis_prediction, plan_optimal,
)
from .roadmap import GoalDef, Lane, MapError, OccludedSiteDef, RoadMap, load_map, save_map
from .scenarios import SCENARIO_IDS, Scenario, build_scenario
from .simulator import RunRecord, control_loop, observe, run_trial, step_world

__version__ = "0.1.0"
