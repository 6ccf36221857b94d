"""Static road layout: lanes, goals, candidate occluded sites, obstructions.

Maps are hand-authored JSON files (one per scenario).  Schema, all units SI
(meters, radians, m/s):

    {
      "lanes": [
        {"id": str, "centerline": [[x, y], ...], "width": float,
         "successors": [str, ...], "left_neighbor": str|null,
         "right_neighbor": str|null, "speed_limit": float}
      ],
      "goals": [
        {"id": str, "location": [x, y], "target_speed": float, "radius": float}
      ],
      "occlusion_sites": [
        {"id": str, "pose": [x, y, heading],
         "behavior": {"kind": "stationary"} |
                     {"kind": "constant_velocity", "speed": float, "lane": str},
         "footprint": [length, width]}
      ],
      "obstructions": [ [[x, y], ...], ... ]   # convex polygons
    }

Unknown keys are rejected so schema drift fails loudly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .config import LANE_LOCATE_TOL, OCCLUDER_INFLATE
from .paths import ReferencePath


class MapError(ValueError):
    """Malformed map file or dangling reference."""


@dataclass(frozen=True)
class GoalDef:
    id: str
    location: tuple[float, float]
    target_speed: float
    radius: float

    def contains(self, x: float, y: float) -> bool:
        return math.hypot(x - self.location[0], y - self.location[1]) <= self.radius


@dataclass(frozen=True)
class SiteBehavior:
    kind: str                      # "stationary" | "constant_velocity"
    speed: float = 0.0
    lane: Optional[str] = None


@dataclass(frozen=True)
class OccludedSiteDef:
    id: str
    pose: tuple[float, float, float]
    behavior: SiteBehavior
    footprint: tuple[float, float]  # length, width


@dataclass
class Lane:
    id: str
    centerline: list[tuple[float, float]]
    width: float
    successors: list[str] = field(default_factory=list)
    left_neighbor: Optional[str] = None
    right_neighbor: Optional[str] = None
    speed_limit: float = 10.0
    path: ReferencePath = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.centerline) < 2:
            raise MapError(f"lane {self.id}: centerline needs >= 2 points")
        for a, b in zip(self.centerline, self.centerline[1:]):
            if math.hypot(b[0] - a[0], b[1] - a[1]) < 1e-9:
                raise MapError(f"lane {self.id}: repeated centerline point {a}")
        if self.width <= 0:
            raise MapError(f"lane {self.id}: width must be positive")
        if self.speed_limit <= 0:
            raise MapError(f"lane {self.id}: speed_limit must be positive")
        self.path = ReferencePath(self.centerline)

    @property
    def length(self) -> float:
        return self.path.length


def _ccw(poly: np.ndarray) -> np.ndarray:
    area = 0.0
    n = len(poly)
    for i in range(n):
        j = (i + 1) % n
        area += poly[i, 0] * poly[j, 1] - poly[j, 0] * poly[i, 1]
    return poly if area >= 0 else poly[::-1].copy()


class RoadMap:
    """Immutable after construction; safe for concurrent reads."""

    def __init__(self, lanes, goals, occlusion_sites=(), obstructions=()):
        self.lanes: dict[str, Lane] = {l.id: l for l in lanes}
        if len(self.lanes) != len(list(lanes)):
            raise MapError("duplicate lane ids")
        self.goals: list[GoalDef] = list(goals)
        self.occlusion_sites: list[OccludedSiteDef] = list(occlusion_sites)
        self.obstructions: list[np.ndarray] = [
            _ccw(np.asarray(p, dtype=float)) for p in obstructions
        ]
        self._validate()

    # -- validation ---------------------------------------------------------

    def _validate(self):
        for lane in self.lanes.values():
            for ref in lane.successors:
                if ref not in self.lanes:
                    raise MapError(f"lane {lane.id}: unknown successor '{ref}'")
            for ref in (lane.left_neighbor, lane.right_neighbor):
                if ref is not None and ref not in self.lanes:
                    raise MapError(f"lane {lane.id}: unknown neighbor '{ref}'")
        seen = set()
        for g in self.goals:
            if g.id in seen:
                raise MapError(f"duplicate goal id '{g.id}'")
            seen.add(g.id)
            if g.radius <= 0:
                raise MapError(f"goal {g.id}: radius must be positive")
            if g.target_speed < 0:
                raise MapError(f"goal {g.id}: target_speed must be >= 0")
            if not self._inside_some_corridor(g.location):
                raise MapError(f"goal {g.id}: location {g.location} off every lane corridor")
        seen = set()
        for site in self.occlusion_sites:
            if site.id in seen:
                raise MapError(f"duplicate occlusion site id '{site.id}'")
            seen.add(site.id)
            if site.behavior.kind not in ("stationary", "constant_velocity"):
                raise MapError(f"site {site.id}: unknown behavior '{site.behavior.kind}'")
            if site.behavior.kind == "constant_velocity":
                if site.behavior.lane not in self.lanes:
                    raise MapError(f"site {site.id}: unknown lane '{site.behavior.lane}'")
                if site.behavior.speed < 0:
                    raise MapError(f"site {site.id}: speed must be >= 0")
            if site.footprint[0] <= 0 or site.footprint[1] <= 0:
                raise MapError(f"site {site.id}: footprint must be positive")
        for poly in self.obstructions:
            if len(poly) < 3:
                raise MapError("obstruction polygons need >= 3 vertices")

    def _inside_some_corridor(self, loc) -> bool:
        for lane in self.lanes.values():
            _, lat = lane.path.project(loc[0], loc[1])
            if abs(lat) <= lane.width / 2 + 0.6:
                return True
        return False

    # -- queries ------------------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.occlusion_sites)

    def goal(self, goal_id: str) -> GoalDef:
        for g in self.goals:
            if g.id == goal_id:
                return g
        raise KeyError(f"unknown goal '{goal_id}'")

    def site(self, site_id: str) -> OccludedSiteDef:
        for s in self.occlusion_sites:
            if s.id == site_id:
                return s
        raise KeyError(f"unknown occlusion site '{site_id}'")

    def lane_frame(self, lane_id: str, arclength: float):
        """(point, heading, curvature) on a lane centerline."""
        lane = self.lanes[lane_id]
        if arclength < -1e-9 or arclength > lane.length + 1e-9:
            raise ValueError(
                f"arclength {arclength} outside [0, {lane.length}] on lane {lane_id}"
            )
        return lane.path.frame(arclength)

    def locate(self, x: float, y: float, heading: Optional[float] = None,
               tol: float = LANE_LOCATE_TOL):
        """Best (lane, arclength, lateral) for a pose, or None if off-road.

        Preference: smallest |lateral|, with heading misalignment as a
        tie-breaker when a heading is supplied.  Memoized on rounded poses
        (the map is immutable).
        """
        cache = self.__dict__.setdefault("_locate_cache", {})
        key = (round(x, 3), round(y, 3),
               None if heading is None else round(heading, 3), tol)
        hit = cache.get(key)
        if hit is not None:
            return hit[0]
        best = None
        best_score = None
        for lane in sorted(self.lanes.values(), key=lambda l: l.id):
            s, lat = lane.path.project(x, y)
            if abs(lat) > tol:
                continue
            score = abs(lat)
            if heading is not None:
                _, lane_h, _ = lane.path.frame(s)
                score += 2.0 * (1.0 - math.cos(heading - lane_h))
            if best_score is None or score < best_score - 1e-12:
                best = (lane, float(s), float(lat))
                best_score = score
        if len(cache) < 200000:
            cache[key] = (best,)
        return best

    def occludes(self, viewer, target, vehicle_boxes=()) -> bool:
        """True iff the open viewer->target segment is blocked.

        vehicle_boxes: iterable of (x, y, heading, length, width) occluders,
        inflated by OCCLUDER_INFLATE on each side.
        """
        x1, y1 = float(viewer[0]), float(viewer[1])
        x2, y2 = float(target[0]), float(target[1])
        for poly in self.obstructions:
            if kernels.segment_hits_convex(
                x1, y1, x2, y2,
                np.ascontiguousarray(poly[:, 0]),
                np.ascontiguousarray(poly[:, 1]),
            ):
                return True
        for (bx, by, bh, blen, bwid) in vehicle_boxes:
            hl = blen / 2 + OCCLUDER_INFLATE
            hw = bwid / 2 + OCCLUDER_INFLATE
            c, s = math.cos(bh), math.sin(bh)
            corners = np.array([
                [bx + c * hl - s * hw, by + s * hl + c * hw],
                [bx - c * hl - s * hw, by - s * hl + c * hw],
                [bx - c * hl + s * hw, by - s * hl - c * hw],
                [bx + c * hl + s * hw, by + s * hl - c * hw],
            ])
            corners = _ccw(corners)
            if kernels.segment_hits_convex(
                x1, y1, x2, y2,
                np.ascontiguousarray(corners[:, 0]),
                np.ascontiguousarray(corners[:, 1]),
            ):
                return True
        return False

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "lanes": [
                {
                    "id": l.id,
                    "centerline": [[float(x), float(y)] for x, y in l.centerline],
                    "width": l.width,
                    "successors": list(l.successors),
                    "left_neighbor": l.left_neighbor,
                    "right_neighbor": l.right_neighbor,
                    "speed_limit": l.speed_limit,
                }
                for l in sorted(self.lanes.values(), key=lambda l: l.id)
            ],
            "goals": [
                {
                    "id": g.id,
                    "location": [float(g.location[0]), float(g.location[1])],
                    "target_speed": g.target_speed,
                    "radius": g.radius,
                }
                for g in self.goals
            ],
            "occlusion_sites": [
                {
                    "id": s.id,
                    "pose": [float(v) for v in s.pose],
                    "behavior": (
                        {"kind": "stationary"}
                        if s.behavior.kind == "stationary"
                        else {
                            "kind": "constant_velocity",
                            "speed": s.behavior.speed,
                            "lane": s.behavior.lane,
                        }
                    ),
                    "footprint": [s.footprint[0], s.footprint[1]],
                }
                for s in self.occlusion_sites
            ],
            "obstructions": [
                [[float(x), float(y)] for x, y in poly] for poly in self.obstructions
            ],
        }


_LANE_KEYS = {"id", "centerline", "width", "successors", "left_neighbor",
              "right_neighbor", "speed_limit"}
_GOAL_KEYS = {"id", "location", "target_speed", "radius"}
_SITE_KEYS = {"id", "pose", "behavior", "footprint"}
_BEHAVIOR_KEYS = {"kind", "speed", "lane"}
_TOP_KEYS = {"lanes", "goals", "occlusion_sites", "obstructions"}


def _reject_unknown(d: dict, allowed: set, where: str):
    extra = set(d) - allowed
    if extra:
        raise MapError(f"{where}: unknown keys {sorted(extra)}")


def map_from_dict(data: dict) -> RoadMap:
    _reject_unknown(data, _TOP_KEYS, "map")
    lanes = []
    for ld in data.get("lanes", []):
        _reject_unknown(ld, _LANE_KEYS, f"lane {ld.get('id', '?')}")
        lanes.append(Lane(
            id=str(ld["id"]),
            centerline=[(float(p[0]), float(p[1])) for p in ld["centerline"]],
            width=float(ld["width"]),
            successors=[str(s) for s in ld.get("successors", [])],
            left_neighbor=ld.get("left_neighbor"),
            right_neighbor=ld.get("right_neighbor"),
            speed_limit=float(ld.get("speed_limit", 10.0)),
        ))
    goals = []
    for gd in data.get("goals", []):
        _reject_unknown(gd, _GOAL_KEYS, f"goal {gd.get('id', '?')}")
        goals.append(GoalDef(
            id=str(gd["id"]),
            location=(float(gd["location"][0]), float(gd["location"][1])),
            target_speed=float(gd["target_speed"]),
            radius=float(gd["radius"]),
        ))
    sites = []
    for sd in data.get("occlusion_sites", []):
        _reject_unknown(sd, _SITE_KEYS, f"occlusion site {sd.get('id', '?')}")
        bd = sd["behavior"]
        _reject_unknown(bd, _BEHAVIOR_KEYS, f"site {sd.get('id', '?')} behavior")
        behavior = SiteBehavior(
            kind=str(bd["kind"]),
            speed=float(bd.get("speed", 0.0)),
            lane=bd.get("lane"),
        )
        sites.append(OccludedSiteDef(
            id=str(sd["id"]),
            pose=(float(sd["pose"][0]), float(sd["pose"][1]), float(sd["pose"][2])),
            behavior=behavior,
            footprint=(float(sd["footprint"][0]), float(sd["footprint"][1])),
        ))
    obstructions = data.get("obstructions", [])
    return RoadMap(lanes, goals, sites, obstructions)


def load_map(path) -> RoadMap:
    """Parse and validate a map file; raises MapError with diagnostics."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MapError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    try:
        return map_from_dict(data)
    except MapError as exc:
        raise MapError(f"{path}: {exc}") from exc


def save_map(road: RoadMap, path):
    with open(path, "w") as fh:
        json.dump(road.to_dict(), fh, indent=2)
        fh.write("\n")
