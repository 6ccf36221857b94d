"""Joint inference of goals and occluded factors from observed behavior.

For every hypothesis (g, z) the likelihood of an observed trajectory is a
Boltzmann factor in the cost gap between the optimal plan from the first
observed state and the observed prefix completed optimally from the current
state: L = exp(beta * (c_star - c_plus)).  A rational vehicle driving
optimally for (g, z) gives c_plus = c_star and L = 1; detours and pauses that
only make sense under some occluded entity depress the likelihood of the
hypotheses that lack it.  Posteriors follow by Bayes' rule over the full
G x Z table; marginals, conditionals, baselines, belief merging across
vehicles, and MAP selection are derived views of that table.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .kinematics import Trajectory, concat
from .maneuvers import LeadCache
from .planner import CostWeights, GoalUnreachable, PlanResult, cost_of, plan_optimal
from .roadmap import GoalDef, RoadMap

log = logging.getLogger(__name__)

DEFAULT_BETA = 1.0
LIKELIHOOD_FLOOR = 1e-300


@dataclass(frozen=True, order=True)
class OccludedFactorInstantiation:
    """Presence bit per candidate occluded site (bit j = entity at site j)."""
    bits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("instantiation bits must be 0/1")

    @property
    def k(self) -> int:
        return len(self.bits)

    @property
    def any_present(self) -> bool:
        return any(self.bits)

    def __str__(self):
        return "z[" + "".join(str(b) for b in self.bits) + "]"


def enumerate_instantiations(k: int) -> tuple[OccludedFactorInstantiation, ...]:
    """All 2^k instantiations, all-zeros first, lexicographic bit order."""
    return tuple(OccludedFactorInstantiation(bits)
                 for bits in itertools.product((0, 1), repeat=k))


@dataclass(frozen=True)
class Priors:
    goal_prior: dict[str, float]
    site_prior: tuple[float, ...]

    def __post_init__(self):
        total = sum(self.goal_prior.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"goal prior sums to {total}, expected 1")
        if any(p < 0.0 or p > 1.0 for p in self.site_prior):
            raise ValueError("site priors must lie in [0, 1]")

    @staticmethod
    def uniform(goal_ids: Sequence[str], k: int, site_p: float = 0.1) -> "Priors":
        n = len(goal_ids)
        return Priors({g: 1.0 / n for g in goal_ids}, tuple([site_p] * k))

    def z_prior(self, z: OccludedFactorInstantiation) -> float:
        p = 1.0
        for bit, sp in zip(z.bits, self.site_prior):
            p *= sp if bit else (1.0 - sp)
        return p


@dataclass
class JointBelief:
    """Normalized table Pr(g, z | observations) for one observed vehicle."""
    vehicle_id: str
    goals: tuple[str, ...]
    zs: tuple[OccludedFactorInstantiation, ...]
    entries: dict[tuple[str, tuple[int, ...]], float]
    beta: float
    priors: Priors
    likelihoods: dict[tuple[str, tuple[int, ...]], float] = field(default_factory=dict)
    completions: dict[tuple[str, tuple[int, ...]], Optional[PlanResult]] = field(
        default_factory=dict, repr=False)
    anchor_state: Optional[object] = None  # vehicle state the completions start from

    def __post_init__(self):
        expect = {(g, z.bits) for g in self.goals for z in self.zs}
        if set(self.entries) != expect:
            raise ValueError("belief table must cover the full G x Z product")
        total = sum(self.entries.values())
        if any(v < 0 for v in self.entries.values()) or abs(total - 1.0) > 1e-9:
            raise ValueError(f"belief table must be a distribution (sum={total})")

    def p(self, goal_id: str, z: OccludedFactorInstantiation) -> float:
        return self.entries[(goal_id, z.bits)]

    def goal_marginal(self) -> dict[str, float]:
        out = {g: 0.0 for g in self.goals}
        for (g, _), v in self.entries.items():
            out[g] += v
        return out


def likelihood(observed: Trajectory, goal: GoalDef, z, road: RoadMap,
               weights: CostWeights = CostWeights(),
               beta: float = DEFAULT_BETA,
               cache: Optional[LeadCache] = None,
               c_star: Optional[float] = None,
               d_max: Optional[int] = None) -> float:
    """Boltzmann likelihood of the observed trajectory under (goal, z)."""
    value, _, _ = likelihood_detail(observed, goal, z, road, weights, beta,
                                    cache=cache, c_star=c_star, d_max=d_max)
    return value


def likelihood_detail(observed: Trajectory, goal: GoalDef, z, road: RoadMap,
                      weights: CostWeights = CostWeights(),
                      beta: float = DEFAULT_BETA,
                      cache: Optional[LeadCache] = None,
                      c_star: Optional[float] = None,
                      d_max: Optional[int] = None):
    """(likelihood, c_star, completion PlanResult|None); 0 when unreachable.

    The optimal-from-start plan runs on the scenario clock at step 0; the
    completion plan from the latest state runs at step len(observed) - 1, so
    both see hypothesized entities at the right point of their predictions.
    """
    if not observed.states:
        raise ValueError("observed trajectory is empty")
    kw = {} if d_max is None else {"d_max": d_max}
    if c_star is None:
        try:
            c_star = plan_optimal(observed.states[0], goal, z, road, weights,
                                  vehicle_id=observed.vehicle_id, cache=cache,
                                  time_offset=0, **kw).cost
        except GoalUnreachable:
            return 0.0, None, None
    try:
        completion = plan_optimal(observed.states[-1], goal, z, road, weights,
                                  vehicle_id=observed.vehicle_id, cache=cache,
                                  time_offset=len(observed.states) - 1, **kw)
    except GoalUnreachable:
        return 0.0, c_star, None
    last = observed.states[-1]
    if len(observed.states) == 1:
        c_plus = completion.cost
    elif goal.contains(last.x, last.y):
        # already inside the goal region: the completion contributes nothing
        c_plus = cost_of(observed, weights)
    else:
        c_plus = cost_of(concat(observed, completion.trajectory), weights)
    return math.exp(beta * (c_star - c_plus)), c_star, completion


def gofi(observed: Trajectory, goals: Sequence[GoalDef],
         zs: Sequence[OccludedFactorInstantiation], priors: Priors,
         road: RoadMap,
         weights: CostWeights = CostWeights(),
         beta: float = DEFAULT_BETA,
         cache: Optional[LeadCache] = None,
         c_star_cache: Optional[dict] = None,
         d_max: Optional[int] = None) -> JointBelief:
    """Joint posterior over (goal, instantiation) from one observed trajectory.

    entries(g, z) proportional to L(obs | g, z) * p(g) * p(z).  When every
    hypothesis has zero mass (all goals unreachable everywhere) the posterior
    falls back to the prior product.
    """
    if not goals or not zs:
        raise ValueError("goals and instantiations must be non-empty")
    raw: dict[tuple[str, tuple[int, ...]], float] = {}
    ls: dict[tuple[str, tuple[int, ...]], float] = {}
    completions: dict[tuple[str, tuple[int, ...]], Optional[PlanResult]] = {}
    for z in zs:
        for g in goals:
            key = (g.id, z.bits)
            c_star = None
            if c_star_cache is not None and key in c_star_cache:
                c_star = c_star_cache[key]
            lval, c_star_out, completion = likelihood_detail(
                observed, g, z, road, weights, beta, cache=cache, c_star=c_star,
                d_max=d_max)
            if c_star_cache is not None and key not in c_star_cache:
                c_star_cache[key] = c_star_out
            if lval > 0.0:
                lval = max(lval, LIKELIHOOD_FLOOR)
            ls[key] = lval
            completions[key] = completion
            raw[key] = lval * priors.goal_prior.get(g.id, 0.0) * priors.z_prior(z)
    total = sum(raw.values())
    if total <= 0.0:
        log.warning("gofi: zero posterior mass for %s; falling back to priors",
                    observed.vehicle_id)
        for z in zs:
            for g in goals:
                raw[(g.id, z.bits)] = priors.goal_prior.get(g.id, 0.0) * priors.z_prior(z)
        total = sum(raw.values())
    entries = {k: v / total for k, v in raw.items()}
    return JointBelief(observed.vehicle_id, tuple(g.id for g in goals), tuple(zs),
                       entries, beta, priors, ls, completions,
                       anchor_state=observed.states[-1])


def marginal_z(belief: JointBelief) -> dict[tuple[int, ...], float]:
    """Pr(z) = sum_g entries(g, z)."""
    out = {z.bits: 0.0 for z in belief.zs}
    for (_, bits), v in belief.entries.items():
        out[bits] += v
    return out


def conditional_goal(belief: JointBelief, z) -> dict[str, float]:
    """Pr(g | z) = entries(g, z) / Pr(z); error on a zero marginal."""
    bits = tuple(getattr(z, "bits", z))
    pz = sum(belief.entries[(g, bits)] for g in belief.goals)
    if pz <= 0.0:
        raise ZeroDivisionError(f"marginal probability of {bits} is zero")
    return {g: belief.entries[(g, bits)] / pz for g in belief.goals}


def merge_beliefs(beliefs: Sequence[JointBelief]) -> dict[tuple[int, ...], float]:
    """Occluded-factor posterior given every observed vehicle.

    Chains each vehicle's evidence through the shared prior:
    Pr(z | all) proportional to p(z) * prod_i [ sum_g L_i(g, z) p(g) ],
    computed from the per-vehicle z-marginals (order-independent).
    """
    if not beliefs:
        raise ValueError("need at least one belief")
    first = beliefs[0]
    zbits = tuple(z.bits for z in first.zs)
    for b in beliefs[1:]:
        if tuple(z.bits for z in b.zs) != zbits:
            raise ValueError("beliefs cover different instantiation sets")
        if b.priors.site_prior != first.priors.site_prior:
            raise ValueError("beliefs use different site priors")
    merged = {}
    for z in first.zs:
        pz = first.priors.z_prior(z)
        if pz <= 0.0:
            merged[z.bits] = 0.0
            continue
        acc = pz
        for b in beliefs:
            mz = sum(b.entries[(g, z.bits)] for g in b.goals)
            acc *= mz / pz
        merged[z.bits] = acc
    total = sum(merged.values())
    if total <= 0.0:
        # no joint support: fall back to the shared prior
        merged = {z.bits: first.priors.z_prior(z) for z in first.zs}
        total = sum(merged.values())
    return {k: v / total for k, v in merged.items()}


BASELINE_METHODS = ("gofi", "map", "gr_only", "of_oracle", "goal_oracle")


def run_baseline(method: str, observed: Trajectory, goals: Sequence[GoalDef],
                 zs: Sequence[OccludedFactorInstantiation], priors: Priors,
                 road: RoadMap,
                 true_z: Optional[OccludedFactorInstantiation] = None,
                 true_goal: Optional[str] = None,
                 weights: CostWeights = CostWeights(),
                 beta: float = DEFAULT_BETA,
                 cache: Optional[LeadCache] = None,
                 c_star_cache: Optional[dict] = None,
                 d_max: Optional[int] = None) -> JointBelief:
    """Inference with the hypothesis space restricted per baseline.

    gr_only  -> Z = {all zeros};  of_oracle -> Z = {true_z};
    goal_oracle -> goals = {true goal};  gofi / map -> unrestricted.
    """
    if method in ("gofi", "map"):
        use_goals, use_zs = goals, zs
    elif method == "gr_only":
        k = len(zs[0].bits)
        use_goals = goals
        use_zs = (OccludedFactorInstantiation((0,) * k),)
    elif method == "of_oracle":
        if true_z is None:
            raise ValueError("of_oracle needs the true instantiation")
        use_goals = goals
        use_zs = (true_z,)
    elif method == "goal_oracle":
        if true_goal is None:
            raise ValueError("goal_oracle needs the true goal id")
        use_goals = [g for g in goals if g.id == true_goal]
        if not use_goals:
            raise ValueError(f"true goal '{true_goal}' not among the goals")
        use_zs = zs
    else:
        raise ValueError(f"unknown inference method '{method}'")
    return gofi(observed, use_goals, use_zs, priors, road, weights, beta,
                cache=cache, c_star_cache=c_star_cache, d_max=d_max)


def map_selection(belief: JointBelief) -> tuple[str, OccludedFactorInstantiation]:
    """(most likely goal given the most likely z); ties break by id order."""
    marg = marginal_z(belief)
    best_bits = min(marg, key=lambda b: (-marg[b], b))
    cond = conditional_goal(belief, best_bits)
    best_goal = min(cond, key=lambda g: (-cond[g], g))
    z = next(z for z in belief.zs if z.bits == best_bits)
    return best_goal, z
