"""The four evaluation scenarios plus the two no-factor variants.

Each scenario pins a bundled map, the true occluded-factor instantiation,
per-vehicle spawn ranges (sampled by seed), goal assignments, and the
perception mode.  Geometry rationale, in brief:

  1  two-way road: the westbound non-ego stops for a pedestrian crossing in
     front of it; the pedestrian then walks into the eastbound ego's lane.
  2  dual carriageway with a slow right lane: the non-ego detours around a
     stopped car in the fast lane that the following ego cannot see.
  3  T-junction: the non-ego waits to turn left across an oncoming vehicle
     hidden from the ego by a corner building.
  4  T-junction: the non-ego brakes toward a queue just past the junction
     behind a car hidden around the corner; the slow-down reads as a turn.
  2v/4v  same roads, no occluded entity, non-ego goal switched to G2.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .inference import OccludedFactorInstantiation
from .kinematics import BodyBox, VehicleState
from .roadmap import OccludedSiteDef, RoadMap, SiteBehavior, load_map

SCENARIO_IDS = ("1", "2", "3", "4", "2v", "4v")


@dataclass(frozen=True)
class VehicleSpec:
    id: str
    role: str                      # ego | observed | occluded | pedestrian
    lane: str                      # spawn lane (site id for occluded roles)
    s_nominal: float               # arclength along the spawn lane
    s_spread: float                # +- uniform range, 0 = fixed
    speed_nominal: float
    speed_spread: float
    goal_id: Optional[str] = None  # true goal for observed; target for ego
    box: BodyBox = field(default_factory=BodyBox)
    route: tuple[str, ...] = ()    # scripted macro-action names (observed role)


@dataclass
class Scenario:
    id: str
    map_name: str
    road: RoadMap
    vehicles: list[VehicleSpec]
    initial: dict[str, VehicleState]   # sampled per seed at build time
    true_z: OccludedFactorInstantiation
    perception_mode: str               # blind | geometric
    duration: float                    # cap, s
    seed: int
    d_max: int = 5
    site_prior: float = 0.1
    runtime: dict = field(default_factory=dict)

    @property
    def ego(self) -> VehicleSpec:
        return next(v for v in self.vehicles if v.role == "ego")

    @property
    def observed(self) -> list[VehicleSpec]:
        return [v for v in self.vehicles if v.role == "observed"]

    @property
    def hidden(self) -> list[VehicleSpec]:
        return [v for v in self.vehicles if v.role in ("occluded", "pedestrian")]

    def non_ego_goals(self):
        """Candidate goal set for observed vehicles (g1/g2 by convention)."""
        return [g for g in self.road.goals if g.id in ("g1", "g2")]


def map_path(name: str):
    return importlib.resources.files("gofisim").joinpath("maps").joinpath(f"{name}.json")


def _load(name: str) -> RoadMap:
    with importlib.resources.as_file(map_path(name)) as p:
        return load_map(p)


_PED_BOX = BodyBox(0.6, 0.6)
_CAR_BOX = BodyBox(4.0, 1.8)


def _specs(scenario_id: str) -> tuple[str, list[VehicleSpec], tuple[int, ...], float]:
    if scenario_id == "1":
        return "scenario1", [
            VehicleSpec("ego", "ego", "e1", 15.0, 5.0, 9.5, 0.75, "ge"),
            VehicleSpec("n1", "observed", "w1", 10.0, 5.0, 9.0, 1.0, "g1",
                        route=("continue_lane", "continue_lane", "follow_lane_to_exit",
                               "continue_lane", "continue_lane")),
            VehicleSpec("ped", "pedestrian", "ped", 2.0, 2.0, 1.4, 0.15, None, _PED_BOX),
        ], (1,), 30.0
    if scenario_id in ("2", "2v"):
        if scenario_id == "2v":
            route = ("change_right", "continue_lane", "exit_right", "continue_lane")
        else:
            route = ("change_right", "continue_lane", "follow_lane_to_exit",
                     "change_left", "continue_lane")
        vehicles = [
            VehicleSpec("ego", "ego", "l1", 10.0, 4.0, 8.0, 1.0, "ge"),
            VehicleSpec("n1", "observed", "l1", 48.0, 4.0, 9.0, 1.0,
                        "g2" if scenario_id == "2v" else "g1", route=route),
        ]
        if scenario_id == "2":
            vehicles.append(VehicleSpec("stopped_car", "occluded", "stopped_car",
                                        0.0, 0.0, 0.0, 0.0, None, _CAR_BOX))
        return "scenario2", vehicles, (1,) if scenario_id == "2" else (0,), 35.0
    if scenario_id == "3":
        return "scenario3", [
            VehicleSpec("ego", "ego", "sn", 19.0, 4.0, 7.0, 1.0, "ge"),
            VehicleSpec("n1", "observed", "mw1", 34.0, 4.0, 7.0, 1.0, "g1",
                        route=("exit_left", "continue_lane", "continue_lane")),
            VehicleSpec("oncoming", "occluded", "oncoming", 0.0, 3.0, 9.5, 0.5,
                        None, _CAR_BOX),
        ], (1,), 40.0
    if scenario_id in ("4", "4v"):
        if scenario_id == "4v":
            route = ("continue_lane", "continue_lane", "continue_lane",
                     "exit_right", "continue_lane")
        else:
            route = ("continue_lane", "continue_lane", "continue_lane", "continue_lane")
        vehicles = [
            VehicleSpec("ego", "ego", "sn", 16.0, 3.0, 5.0, 1.0, "ge"),
            VehicleSpec("n1", "observed", "e1", 13.0, 3.0, 9.5, 0.5,
                        "g2" if scenario_id == "4v" else "g1", route=route),
        ]
        if scenario_id == "4":
            vehicles.append(VehicleSpec("queued_car", "occluded", "queued_car",
                                        0.0, 0.0, 0.3, 0.0, None, _CAR_BOX))
        return "scenario4", vehicles, (1,) if scenario_id == "4" else (0,), 35.0
    raise ValueError(f"unknown scenario id '{scenario_id}'")


def _spawn_state(road: RoadMap, spec: VehicleSpec, rng: np.random.Generator) -> VehicleState:
    s_off = rng.uniform(-spec.s_spread, spec.s_spread) if spec.s_spread > 0 else 0.0
    v_off = rng.uniform(-spec.speed_spread, spec.speed_spread) if spec.speed_spread > 0 else 0.0
    if spec.role in ("occluded", "pedestrian"):
        site = road.site(spec.lane)
        if site.behavior.kind == "stationary":
            x, y, h = site.pose
            return VehicleState((x, y), h, 0.0, 0.0)
        lane = road.lanes[site.behavior.lane]
        s0, _ = lane.path.project(site.pose[0], site.pose[1])
        s = min(max(s0 + spec.s_nominal + s_off, 0.0), lane.length)
        (x, y), h, _ = lane.path.frame(s)
        return VehicleState((x, y), h, max(spec.speed_nominal + v_off, 0.0), 0.0)
    lane = road.lanes[spec.lane]
    s = min(max(spec.s_nominal + s_off, 0.0), lane.length - 1.0)
    (x, y), h, _ = lane.path.frame(s)
    return VehicleState((x, y), h, max(spec.speed_nominal + v_off, 0.0), 0.0)


def build_scenario(scenario_id: str, seed: int,
                   perception_mode: str = "blind") -> Scenario:
    """Instantiate a scenario with seed-randomized initial conditions.

    Static occluded vehicles spawn exactly at their site pose; everything
    else draws position and speed uniformly from its per-scenario range.
    """
    scenario_id = str(scenario_id)
    if perception_mode not in ("blind", "geometric"):
        raise ValueError(f"unknown perception mode '{perception_mode}'")
    map_name, vehicles, true_bits, duration = _specs(scenario_id)
    road = _load(map_name)
    rng = np.random.default_rng(int(seed))
    initial = {}
    for spec in vehicles:
        initial[spec.id] = _spawn_state(road, spec, rng)

    # anchor candidate sites to the sampled entity state: the latent variable
    # is the entity's presence, not its kinematics
    by_site = {spec.lane: spec for spec in vehicles
               if spec.role in ("occluded", "pedestrian")}
    sites = []
    for site in road.occlusion_sites:
        spec = by_site.get(site.id)
        if spec is not None and site.behavior.kind == "constant_velocity":
            st = initial[spec.id]
            sites.append(OccludedSiteDef(
                site.id, (st.x, st.y, st.heading),
                SiteBehavior("constant_velocity", st.speed, site.behavior.lane),
                site.footprint))
        else:
            sites.append(site)
    road.occlusion_sites = sites

    return Scenario(
        id=scenario_id, map_name=map_name, road=road, vehicles=vehicles,
        initial=initial,
        true_z=OccludedFactorInstantiation(true_bits),
        perception_mode=perception_mode, duration=duration, seed=int(seed),
    )
