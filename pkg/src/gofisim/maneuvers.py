"""Maneuvers and macro-actions.

A maneuver resolves to a reference path plus a velocity profile; expansion
rolls the closed loop at DT (proportional speed tracking, adaptive cruise
against traffic ahead on the path, a stopping-distance guard) until the
maneuver's termination condition holds.  A macro-action is a fixed sequence
of maneuvers; the library is:

    continue_lane       follow the lane to the next decision point
    change_left/right   20 m cubic lateral blend into the neighbor lane
    exit_left/right     yield at the junction entry, then take the turn
    follow_lane_to_exit yield (if needed), then cross the junction straight
    stop_and_wait       brake to a standstill and hold

Termination conditions: follow_lane/lane_change/turn end at their path end;
stop ends after its hold time at standstill; give_way ends the moment the
watched conflict region is predicted clear (possibly immediately).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .config import (
    A_LAT_MAX, ACC_GAIN, BLEND_LENGTH, BRAKE_COMFORT, DT, GIVE_WAY_MARGIN,
    GUARD_DECEL, KP_SPEED, LANE_LOCATE_TOL, LOOKAHEAD, MANEUVER_TIME_CAP,
    PATH_STEP, STANDOFF, STOP_HOLD, TIME_GAP, VehicleLimits,
)
from .kinematics import BodyBox, Trajectory, VehicleState
from .paths import ReferencePath, min_distance_between
from .roadmap import Lane, RoadMap

CORRIDOR_HALF_WIDTH = 2.0     # lateral band treated as "on the path", m
CONFLICT_RADIUS = 2.2         # distance to the turn path that counts as conflict, m
JUNCTION_LOOKAHEAD = 80.0     # how far ahead an exit macro may bind, m
CONTINUE_BLOCK = 30.0         # continue_lane decision-point spacing, m
TURN_CLASS_ANGLE = 0.35       # |heading change| separating turns from straight, rad
HOLD_LINE_SETBACK = 0.8       # stop line short of the junction entry, m


class ManeuverError(Exception):
    pass


class InapplicableMacro(ManeuverError):
    pass


class ExpansionTimeout(ManeuverError):
    """Maneuver failed to terminate within MANEUVER_TIME_CAP simulated seconds."""


class ExpansionBlocked(ManeuverError):
    """Vehicle stalled behind traffic with the maneuver unfinished."""


@dataclass(frozen=True)
class Maneuver:
    kind: str                                 # follow_lane | lane_change | turn | stop | give_way
    lane: Optional[str] = None                # anchor lane id
    start_s: float = 0.0                      # anchor arclength on the lane
    start_lat: float = 0.0                    # anchor lateral offset (left positive)
    distance: float = 0.0                     # follow_lane
    direction: Optional[str] = None           # lane_change: left | right
    exit_lane: Optional[str] = None           # turn / give_way target connector
    duration: float = 0.0                     # stop hold time
    watch: tuple[str, ...] = ()               # give_way watched lane ids


@dataclass(frozen=True)
class MacroAction:
    name: str
    maneuvers: tuple[Maneuver, ...]

    def __post_init__(self):
        if not self.maneuvers:
            raise ValueError("macro-action needs at least one maneuver")


@dataclass(frozen=True)
class VelocityProfile:
    arclengths: np.ndarray
    speeds: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.arclengths) <= 0):
            raise ValueError("profile arclengths must be strictly increasing")
        if np.any(self.speeds < 0):
            raise ValueError("profile speeds must be >= 0")

    def value_at(self, s: float) -> float:
        return float(np.interp(s, self.arclengths, self.speeds))


@dataclass(frozen=True)
class PredictedAgent:
    """A traffic participant the expansion must respect.

    start_index anchors the trajectory on the absolute simulation clock:
    trajectory.states[i] is the prediction for physics step start_index + i.
    Before its start the agent sits at states[0]; after its end it holds the
    final state (a parked vehicle).
    """
    trajectory: Trajectory
    box: BodyBox = field(default_factory=BodyBox)
    start_index: int = 0


# ---------------------------------------------------------------------------
# lane-chain walking and junction structure


@dataclass(frozen=True)
class ChainPiece:
    lane_id: str
    s_from: float
    s_to: float

    @property
    def length(self) -> float:
        return self.s_to - self.s_from


@dataclass(frozen=True)
class Chain:
    pieces: tuple[ChainPiece, ...]
    junction_exits: tuple[str, ...]   # successor ids at the chain end (>= 2 means junction)
    dead_end: bool = False            # the road physically ends at the chain end

    @property
    def length(self) -> float:
        return sum(p.length for p in self.pieces)


def walk_chain(road: RoadMap, lane: Lane, s0: float, max_len: float = 200.0) -> Chain:
    """Follow single-successor links from (lane, s0) to a junction or dead end."""
    pieces = []
    seen = set()
    cur = lane
    s = s0
    total = 0.0
    while True:
        take = min(cur.length - s, max_len - total)
        take = max(take, 0.0)
        pieces.append(ChainPiece(cur.id, s, s + take))
        total += take
        if total >= max_len - 1e-9:
            return Chain(tuple(pieces), ())
        if len(cur.successors) != 1:
            return Chain(tuple(pieces), tuple(sorted(cur.successors)),
                         dead_end=not cur.successors)
        nxt = cur.successors[0]
        if nxt in seen:
            return Chain(tuple(pieces), ())
        seen.add(nxt)
        cur = road.lanes[nxt]
        s = 0.0


def turn_direction(road: RoadMap, entry: Lane, exit_id: str) -> str:
    """left / right / straight classification by net heading change."""
    _, h_in, _ = entry.path.frame(entry.length)
    conn = road.lanes[exit_id]
    _, h_out, _ = conn.path.frame(conn.length)
    delta = kernels.wrap_angle(h_out - h_in)
    if delta > TURN_CLASS_ANGLE:
        return "left"
    if delta < -TURN_CLASS_ANGLE:
        return "right"
    return "straight"


def conflict_watch(road: RoadMap, entry_id: str, exit_id: str) -> tuple[str, ...]:
    """Lanes whose geometry comes close enough to the connector to conflict."""
    cache = road.__dict__.setdefault("_conflict_cache", {})
    key = (entry_id, exit_id)
    if key not in cache:
        conn = road.lanes[exit_id]
        watch = []
        for other in sorted(road.lanes.values(), key=lambda l: l.id):
            if other.id in (entry_id, exit_id):
                continue
            if min_distance_between(other.path, conn.path) < CONFLICT_RADIUS:
                watch.append(other.id)
        cache[key] = tuple(watch)
    return cache[key]


# ---------------------------------------------------------------------------
# geometry resolution


@dataclass
class ResolvedGeometry:
    path: ReferencePath
    pieces: list[tuple[str, float, float, float]]  # (lane_id, lane_from, lane_to, path_start)
    s_end: float
    limits_overlay: list[tuple[float, float, float]]  # (path_from, path_to, speed limit)
    stop_line: Optional[float] = None                 # path arclength, None = free flow
    end_lane: Optional[str] = None
    end_lane_s: float = 0.0
    zero_end: bool = False                            # road dead-ends: profile reaches 0


PROFILE_LOOKAHEAD = 25.0  # profile extension past a maneuver's end, m


def _chain_polyline(road: RoadMap, chain: Chain, upto: Optional[float] = None,
                    extend: float = 0.0):
    """(points, pieces, overlay, s_end, end_lane, end_lane_s) of a chain prefix.

    The polyline continues `extend` meters past `upto` so speed profiles can
    anticipate upcoming geometry; the maneuver itself still ends at s_end.
    """
    chain_len = chain.length
    s_end = chain_len if upto is None else min(upto, chain_len)
    built_cap = min(s_end + extend, chain_len)
    polys = []
    pieces = []
    overlay = []
    path_start = 0.0
    end_lane = None
    end_lane_s = 0.0
    for piece in chain.pieces:
        lane = road.lanes[piece.lane_id]
        if end_lane is None and path_start + piece.length >= s_end - 1e-9:
            end_lane = lane.id
            end_lane_s = piece.s_from + max(0.0, s_end - path_start)
        take = min(piece.length, built_cap - path_start)
        if take > 1e-6:
            a, b = piece.s_from, piece.s_from + take
            n = max(2, int(math.ceil((b - a) / PATH_STEP)) + 1)
            ss = np.linspace(a, b, n)
            polys.append(np.array([lane.path.point_at(s) for s in ss]))
            pieces.append((lane.id, a, b, path_start))
            overlay.append((path_start, path_start + take, lane.speed_limit))
            path_start += take
        if path_start >= built_cap - 1e-9 and end_lane is not None:
            break
    if not polys:
        return None, pieces, overlay, 0.0, end_lane, end_lane_s
    points = np.concatenate(
        [p if i == 0 else (p[1:] if np.allclose(p[0], polys[i - 1][-1]) else p)
         for i, p in enumerate(polys)], axis=0)
    return points, pieces, overlay, s_end, end_lane, end_lane_s


LEAD_SCAN_BEYOND = 40.0  # how far past a junction leads still matter, m


def _through_exit(road: RoadMap, chain: Chain) -> Optional[str]:
    """The straight-most junction exit (through traffic's continuation)."""
    if not chain.junction_exits:
        return None
    entry = road.lanes[chain.pieces[-1].lane_id]
    _, h_in, _ = entry.path.frame(entry.length)

    def bend(exit_id: str) -> float:
        conn = road.lanes[exit_id]
        _, h_out, _ = conn.path.frame(conn.length)
        return abs(kernels.wrap_angle(h_out - h_in))

    return min(chain.junction_exits, key=lambda e: (bend(e), e))


def _chain_geometry(road: RoadMap, chain: Chain, upto: Optional[float] = None,
                    extend: float = 0.0) -> ResolvedGeometry:
    points, pieces, overlay, s_end, end_lane, end_lane_s = _chain_polyline(
        road, chain, upto, extend)
    if points is None:
        raise InapplicableMacro("no road left ahead")
    path = ReferencePath(points)
    geo = ResolvedGeometry(path, pieces, s_end, overlay,
                           end_lane=end_lane, end_lane_s=end_lane_s)
    # the braking ramp applies whenever the built geometry (including the
    # profile lookahead) reaches a dead end, so anticipation is independent
    # of how the route is chunked into maneuvers
    geo.zero_end = chain.dead_end and path.length >= chain.length - 1e-6
    # map leads just beyond a junction onto the path's arclength continuation
    # (geometry need not extend: the cruise law only needs gap arithmetic)
    through = _through_exit(road, chain)
    if through is not None and path.length >= chain.length - 1e-6:
        budget = LEAD_SCAN_BEYOND
        nxt = walk_chain(road, road.lanes[through], 0.0, max_len=budget)
        offset = chain.length
        for piece in nxt.pieces:
            if piece.length <= 1e-6:
                continue
            geo.pieces.append((piece.lane_id, piece.s_from, piece.s_to, offset))
            offset += piece.length
    return geo


def _resolve_follow(road: RoadMap, lane: Lane, s0: float, distance: float) -> ResolvedGeometry:
    chain = walk_chain(road, lane, s0)
    if chain.length < 0.25:
        raise InapplicableMacro(f"no road left to follow on lane {lane.id}")
    return _chain_geometry(road, chain, upto=min(distance, chain.length),
                           extend=PROFILE_LOOKAHEAD)


def blend_length_for(road: RoadMap, lane: Lane, s0: float, direction: str,
                     start_lat: float) -> float:
    """Lane-change length shrinks with lateral progress already made.

    Replanning mid-blend must converge: a fresh full-length blend every
    control step would keep receding.
    """
    target_id = lane.left_neighbor if direction == "left" else lane.right_neighbor
    if target_id is None:
        raise InapplicableMacro(f"lane {lane.id} has no {direction} neighbor")
    target = road.lanes[target_id]
    x0, y0 = lane.path.point_at(s0)
    _, lat_t = target.path.project(x0, y0)
    gap = max(abs(lat_t), 1.0)
    progressed = max(0.0, -start_lat if direction == "right" else start_lat)
    frac = min(max((gap - progressed) / gap, 0.3), 1.0)
    return BLEND_LENGTH * frac


def _resolve_lane_change(road: RoadMap, lane: Lane, s0: float, direction: str,
                         start_lat: float = 0.0) -> ResolvedGeometry:
    target_id = lane.left_neighbor if direction == "left" else lane.right_neighbor
    if target_id is None:
        raise InapplicableMacro(f"lane {lane.id} has no {direction} neighbor")
    target = road.lanes[target_id]
    blend = blend_length_for(road, lane, s0, direction, start_lat)
    if lane.length - s0 < blend + 1.0:
        raise InapplicableMacro("not enough lane left for a lane change")
    x0, y0 = lane.path.point_at(s0)
    t0, _ = target.path.project(x0, y0)
    if target.length - t0 < blend + 1.0:
        raise InapplicableMacro("target lane too short for a lane change")
    n = int(blend / 0.5) + 1
    pts = np.empty((n, 2))
    for i in range(n):
        u = i / (n - 1)
        w = u * u * (3.0 - 2.0 * u)
        sx, sy = lane.path.point_at(s0 + u * blend)
        tx, ty = target.path.point_at(t0 + u * blend)
        pts[i, 0] = (1.0 - w) * sx + w * tx
        pts[i, 1] = (1.0 - w) * sy + w * ty
    s_end = blend
    tail = min(PROFILE_LOOKAHEAD, target.length - (t0 + blend) - 0.5)
    blend_end = t0 + blend
    if tail > 1.0:
        m = int(math.ceil(tail / PATH_STEP)) + 1
        ext = np.array([target.path.point_at(blend_end + tail * i / (m - 1))
                        for i in range(1, m)])
        pts = np.concatenate([pts, ext], axis=0)
    path = ReferencePath(pts)
    limit = min(lane.speed_limit, target.speed_limit)
    # leads matter in the source lane only while still mostly inside it, and
    # in the target lane once committed; ranges overlap through mid-blend
    pieces = [
        (lane.id, s0, s0 + 0.55 * blend, 0.0),
        (target.id, t0 + 0.35 * blend,
         t0 + blend + max(tail, 0.0), 0.35 * blend),
    ]
    overlay = [(0.0, s_end, limit), (s_end, path.length, target.speed_limit)]
    return ResolvedGeometry(path, pieces, s_end, overlay,
                            end_lane=target.id, end_lane_s=blend_end)


def _resolve_turn(road: RoadMap, lane: Lane, s0: float, exit_id: str) -> ResolvedGeometry:
    chain = walk_chain(road, lane, s0)
    if exit_id not in chain.junction_exits:
        raise InapplicableMacro(f"no junction exit '{exit_id}' ahead of lane {lane.id}")
    points, pieces, overlay, _, _, _ = _chain_polyline(road, chain)
    conn = road.lanes[exit_id]
    pre_len = 0.0 if points is None else ReferencePath(points).length
    conn_pts = conn.path.points_array()
    if points is None:
        merged = conn_pts
    elif np.allclose(conn_pts[0], points[-1]):
        merged = np.concatenate([points, conn_pts[1:]], axis=0)
    else:
        merged = np.concatenate([points, conn_pts], axis=0)
    pieces = pieces + [(conn.id, 0.0, conn.length, pre_len)]
    s_end = pre_len + conn.length
    overlay = overlay + [(pre_len, s_end, conn.speed_limit)]
    # profile lookahead into the connector's continuation
    if conn.successors:
        nxt_chain = walk_chain(road, road.lanes[sorted(conn.successors)[0]], 0.0)
        ext_pts, ext_pieces, ext_overlay, _, _, _ = _chain_polyline(
            road, nxt_chain, upto=PROFILE_LOOKAHEAD)
        if ext_pts is not None:
            if np.allclose(ext_pts[0], merged[-1]):
                ext_pts = ext_pts[1:]
            merged = np.concatenate([merged, ext_pts], axis=0)
            for (lid, a, b, ps) in ext_pieces:
                pieces.append((lid, a, b, ps + s_end))
            for (a, b, lim) in ext_overlay:
                overlay.append((a + s_end, b + s_end, lim))
    path = ReferencePath(merged)
    return ResolvedGeometry(path, pieces, s_end, overlay,
                            end_lane=conn.id, end_lane_s=conn.length)


def resolve_geometry(road: RoadMap, m: Maneuver) -> ResolvedGeometry:
    """Geometry for a maneuver; memoized per anchor (maps are immutable)."""
    cache = road.__dict__.setdefault("_geo_cache", {})
    key = (m.kind, m.lane, round(m.start_s, 3), round(m.start_lat, 2),
           round(m.distance, 3), m.direction, m.exit_lane)
    hit = cache.get(key)
    if hit is not None:
        return hit
    geo = _resolve_geometry(road, m)
    if len(cache) < 100000:
        cache[key] = geo
    return geo


def _resolve_geometry(road: RoadMap, m: Maneuver) -> ResolvedGeometry:
    if m.lane is None:
        raise InapplicableMacro("maneuver is not anchored to a lane")
    lane = road.lanes[m.lane]
    if m.kind == "follow_lane":
        return _resolve_follow(road, lane, m.start_s, m.distance)
    if m.kind == "lane_change":
        return _resolve_lane_change(road, lane, m.start_s, m.direction, m.start_lat)
    if m.kind == "turn":
        return _resolve_turn(road, lane, m.start_s, m.exit_lane)
    if m.kind == "stop":
        chain = walk_chain(road, lane, m.start_s)
        geo = _chain_geometry(road, chain, upto=min(40.0, chain.length))
        geo.stop_line = None  # set at expansion time from the actual speed
        return geo
    if m.kind == "give_way":
        chain = walk_chain(road, lane, m.start_s)
        try:
            geo = _chain_geometry(road, chain)
        except InapplicableMacro:
            # at the junction entry already: hold on a stub of the connector
            if not m.exit_lane or m.exit_lane not in road.lanes:
                raise
            conn = road.lanes[m.exit_lane]
            take = min(4.0, conn.length)
            n = int(take / PATH_STEP) + 2
            pts = np.array([conn.path.point_at(take * i / (n - 1)) for i in range(n)])
            path = ReferencePath(pts)
            geo = ResolvedGeometry(path, [(conn.id, 0.0, take, 0.0)], path.length,
                                   [(0.0, take, conn.speed_limit)],
                                   end_lane=lane.id, end_lane_s=lane.length)
        geo.stop_line = max(geo.s_end - HOLD_LINE_SETBACK, 0.1)
        return geo
    raise InapplicableMacro(f"unknown maneuver kind '{m.kind}'")


def build_profile(geo: ResolvedGeometry, v_max: float,
                  zero_from: Optional[float] = None) -> VelocityProfile:
    """Speed-limit + curvature-capped profile, braking-feasible backwards."""
    path = geo.path
    if zero_from is None and geo.zero_end:
        zero_from = max(path.length - 0.5, 0.1)
    v = np.full(len(path.s), v_max)
    for (a, b, lim) in geo.limits_overlay:
        mask = (path.s >= a - 1e-9) & (path.s <= b + 1e-9)
        v[mask] = np.minimum(v[mask], lim)
    curve_cap = np.sqrt(A_LAT_MAX / np.maximum(np.abs(path.curvature), 1e-9))
    v = np.minimum(v, curve_cap)
    if zero_from is not None:
        v[path.s >= zero_from - 1e-9] = 0.0
    for i in range(len(v) - 2, -1, -1):
        ds = path.s[i + 1] - path.s[i]
        v[i] = min(v[i], math.sqrt(v[i + 1] ** 2 + 2.0 * BRAKE_COMFORT * ds))
    return VelocityProfile(path.s.copy(), v)


def velocity_profile(m: Maneuver, road: RoadMap,
                     limits: VehicleLimits = VehicleLimits()) -> VelocityProfile:
    """The target-speed profile a maneuver would track."""
    geo = resolve_geometry(road, m)
    zero = None
    if m.kind == "stop":
        zero = min(geo.path.length - 0.1, 8.0)
    elif m.kind == "give_way":
        zero = geo.stop_line
    return build_profile(geo, limits.v_max, zero_from=zero)


# ---------------------------------------------------------------------------
# lead tables (traffic ahead on the path) and conflict occupancy


class LeadCache:
    """Per-control-step cache of trajectory->lane projections.

    Keys use object identity, so the cached trajectory is kept referenced in
    the value: otherwise a recycled id() could alias a dead trajectory's
    projection to a new object.
    """

    def __init__(self, road: RoadMap):
        self.road = road
        self._proj: dict[tuple[int, str], tuple] = {}

    def projection(self, traj: Trajectory, lane_id: str):
        key = (id(traj), lane_id)
        hit = self._proj.get(key)
        if hit is None or hit[0] is not traj:
            lane = self.road.lanes[lane_id]
            s, lat = lane.path.project_many(traj.positions())
            hit = (traj, s, lat)
            self._proj[key] = hit
        return hit[1], hit[2]


def build_lead_table(cache: LeadCache, geo: ResolvedGeometry,
                     others: Sequence[PredictedAgent],
                     virtual_stop: Optional[float], ego_half_len: float) -> np.ndarray:
    """(n_time, n_cols) arclengths of lead rear faces on the path; inf = absent.

    Rows are absolute physics-step indices; each agent's prediction is
    shifted by its start_index and held at both ends.
    """
    n_time = max([o.start_index + len(o.trajectory) for o in others], default=1)
    cols = len(others) + (1 if virtual_stop is not None else 0)
    table = np.full((max(n_time, 1), max(cols, 1)), np.inf)
    for j, agent in enumerate(others):
        half = agent.box.length / 2.0
        nt = len(agent.trajectory)
        best = np.full(nt, np.inf)
        for (lane_id, lane_from, lane_to, path_start) in geo.pieces:
            s, lat = cache.projection(agent.trajectory, lane_id)
            mask = (np.abs(lat) <= CORRIDOR_HALF_WIDTH) & \
                   (s >= lane_from - 1.0) & (s <= lane_to + 1.0)
            cand = np.where(mask, s - lane_from + path_start, np.inf)
            best = np.minimum(best, cand)
        si = agent.start_index
        table[si:si + nt, j] = best - half
        if si > 0:
            table[:si, j] = best[0] - half
        if si + nt < len(table):
            table[si + nt:, j] = best[-1] - half
    if virtual_stop is not None:
        table[:, -1] = virtual_stop + ego_half_len + STANDOFF
    return table


def occupancy_interval(cache: LeadCache, conflict_lane: str,
                       agent: PredictedAgent) -> Optional[tuple[int, int]]:
    """[first, last] absolute step index the agent spends in the conflict region."""
    s, lat = cache.projection(agent.trajectory, conflict_lane)
    lane = cache.road.lanes[conflict_lane]
    inside = (np.abs(lat) <= CONFLICT_RADIUS) & (s > -1.0) & (s < lane.length + 1.0)
    idx = np.nonzero(inside)[0]
    if len(idx) == 0:
        return None
    return agent.start_index + int(idx[0]), agent.start_index + int(idx[-1])


def _crossing_time(distance: float, v_cap: float, accel: float = 2.0) -> float:
    """Traverse time from rest with bounded acceleration."""
    d_acc = v_cap * v_cap / (2.0 * accel)
    if distance <= d_acc:
        return math.sqrt(2.0 * distance / accel)
    return v_cap / accel + (distance - d_acc) / v_cap


def clear_index(cache: LeadCache, road: RoadMap, exit_id: str,
                others: Sequence[PredictedAgent], now_index: int,
                approach_dist: float, v_cap: float) -> Optional[int]:
    """Earliest absolute time index at which the junction is predicted clear.

    Clear at t iff every conflicting agent either leaves the region before t
    or enters it later than the ego needs to cross (plus margin).  None means
    the region never clears within the prediction horizon.
    """
    conn = road.lanes[exit_id]
    cross = _crossing_time(approach_dist + conn.length + 4.0, v_cap)
    need = int(math.ceil((cross + GIVE_WAY_MARGIN) / DT))
    intervals = []
    for agent in others:
        occ = occupancy_interval(cache, exit_id, agent)
        if occ is not None:
            a, b = occ
            if b >= agent.start_index + len(agent.trajectory) - 1:
                b = None  # parked in the region: never leaves
            intervals.append((a, b))
    if not intervals:
        return now_index
    candidates = sorted({now_index} | {b + 1 for (_, b) in intervals if b is not None})
    for t in candidates:
        if t < now_index:
            continue
        ok = True
        for (a, b) in intervals:
            if not (t + need <= a or (b is not None and t > b)):
                ok = False
                break
        if ok:
            return t
    return None


# ---------------------------------------------------------------------------
# expansion


def _run_rollout(geo: ResolvedGeometry, profile: VelocityProfile,
                 s0: float, v0: float, lat0: float,
                 others, cache, virtual_stop, stop_at_end,
                 time_offset: int, limits: VehicleLimits,
                 max_steps: int, stall_ok: bool, box: BodyBox):
    lead = build_lead_table(cache, geo, others, virtual_stop, box.length / 2.0)
    out = np.empty((max_steps, 5))
    ramp = min(10.0, max(geo.path.length - s0, 1.0))
    steps, s, v, status = kernels.rollout(
        geo.path.s, geo.path.x, geo.path.y, geo.path.heading, geo.path.curvature,
        profile.arclengths, profile.speeds,
        s0, v0, lat0, ramp,
        geo.s_end if not stop_at_end else (virtual_stop if virtual_stop is not None else geo.s_end),
        stop_at_end,
        DT, limits.v_max, limits.a_min, limits.a_max, KP_SPEED, LOOKAHEAD,
        lead, time_offset, box.length / 2.0,
        STANDOFF, TIME_GAP, ACC_GAIN, GUARD_DECEL,
        stall_ok, max_steps, out,
    )
    states = [
        VehicleState((out[i, 0], out[i, 1]), out[i, 2], out[i, 3], out[i, 4])
        for i in range(steps)
    ]
    return states, s, v, status


def _stationary(state: VehicleState, n: int) -> list[VehicleState]:
    parked = VehicleState(state.position, state.heading, 0.0, 0.0)
    return [parked] * n


def expand(macro: MacroAction, start: VehicleState, road: RoadMap,
           others: Sequence[PredictedAgent] = (),
           time_offset: int = 0,
           goal=None,
           limits: VehicleLimits = VehicleLimits(),
           vehicle_id: str = "veh",
           cache: Optional[LeadCache] = None,
           stall_ok: bool = False) -> Trajectory:
    """Closed-loop trajectory of a macro-action from `start` at DT resolution.

    `others` are treated as ground truth for adaptive cruise and yielding.
    When `goal` is given, the trajectory is truncated at the first state
    inside the goal region.  Raises InapplicableMacro, ExpansionBlocked, or
    ExpansionTimeout.
    """
    if cache is None:
        cache = LeadCache(road)
    loc = road.locate(start.x, start.y, start.heading)
    if loc is None:
        raise InapplicableMacro("start state is not on any lane")
    lane, s_on_lane, lat = loc

    states: list[VehicleState] = [start]
    cur = start
    total_cap = int(MANEUVER_TIME_CAP / DT)
    box = BodyBox(limits.length, limits.width)

    if goal is not None and goal.contains(cur.x, cur.y):
        return Trajectory(vehicle_id, DT, states)

    for mi, m0 in enumerate(macro.maneuvers):
        m = Maneuver(
            kind=m0.kind, lane=lane.id, start_s=s_on_lane,
            start_lat=lat if mi == 0 else 0.0,
            distance=m0.distance, direction=m0.direction,
            exit_lane=m0.exit_lane, duration=m0.duration, watch=m0.watch,
        )
        geo = resolve_geometry(road, m)
        abs_index = time_offset + len(states)  # index of the next emitted state
        budget = total_cap - (len(states) - 1)
        if budget <= 0:
            raise ExpansionTimeout(f"macro {macro.name} exceeded the time cap")
        lat0 = lat if mi == 0 else 0.0

        failure: Optional[ManeuverError] = None
        if m.kind in ("follow_lane", "lane_change", "turn"):
            # a chunk ending where the road dead-ends must come to a stop
            stop_here = geo.zero_end and geo.s_end >= geo.path.length - 0.6
            profile = build_profile(geo, limits.v_max)
            new, s, v, status = _run_rollout(
                geo, profile, 0.0, cur.speed, lat0,
                others, cache, None, stop_here, abs_index, limits, budget, stall_ok, box)
            if status == kernels.STALLED:
                failure = ExpansionBlocked(f"{m.kind} stalled behind traffic")
            elif status == kernels.HORIZON and not stall_ok:
                failure = ExpansionTimeout(f"{m.kind} did not terminate")

        elif m.kind == "stop":
            brake_dist = cur.speed * cur.speed / (2.0 * BRAKE_COMFORT) + 0.5
            line = min(brake_dist, geo.path.length - 0.1)
            profile = build_profile(geo, limits.v_max, zero_from=line)
            new, s, v, status = _run_rollout(
                geo, profile, 0.0, cur.speed, lat0,
                others, cache, line, True, abs_index, limits, budget, stall_ok, box)
            if status == kernels.HORIZON and not stall_ok:
                failure = ExpansionTimeout("stop did not reach standstill")
            else:
                hold = int(round(m.duration / DT))
                anchor = new[-1] if new else cur
                new = new + _stationary(anchor, min(hold, budget - len(new)))

        elif m.kind == "give_way":
            if any(w not in road.lanes for w in m.watch):
                raise InapplicableMacro("give_way watches an unknown lane")
            v_cap = min(road.lanes[m.exit_lane].speed_limit if m.exit_lane else 7.0, 7.0)
            t_clear = clear_index(cache, road, m.exit_lane, others, abs_index,
                                  0.0, v_cap) if m.exit_lane else abs_index
            if t_clear is not None and t_clear <= abs_index:
                new = []
            else:
                wait_budget = budget if t_clear is None else min(budget, t_clear - abs_index)
                profile = build_profile(geo, limits.v_max, zero_from=geo.stop_line)
                new, s, v, status = _run_rollout(
                    geo, profile, 0.0, cur.speed, lat0,
                    others, cache, geo.stop_line, True, abs_index, limits,
                    wait_budget, True, box)
                if t_clear is None:
                    failure = ExpansionTimeout("give_way never clears")
                else:
                    anchor = new[-1] if new else cur
                    if len(new) < t_clear - abs_index:
                        pad = min(t_clear - abs_index - len(new), budget - len(new))
                        if len(new) + pad < t_clear - abs_index:
                            failure = ExpansionTimeout("give_way hold exceeds the time cap")
                        hold_state = VehicleState(anchor.position, anchor.heading, 0.0, 0.0)
                        new = new + [hold_state] * pad
        else:
            raise InapplicableMacro(f"unknown maneuver kind '{m.kind}'")

        # reaching the goal region ends the expansion, even mid-failure:
        # the produced prefix is a complete plan
        if goal is not None:
            for i, st in enumerate(new):
                if goal.contains(st.x, st.y):
                    states.extend(new[: i + 1])
                    return Trajectory(vehicle_id, DT, states)
        if failure is not None:
            raise failure
        states.extend(new)
        if len(states) - 1 > total_cap:
            raise ExpansionTimeout(f"macro {macro.name} exceeded the time cap")
        if new:
            cur = states[-1]
        # re-anchor on the map for the next maneuver
        loc = road.locate(cur.x, cur.y, cur.heading)
        if loc is None:
            raise InapplicableMacro("maneuver ended off-road")
        lane, s_on_lane, lat = loc

    return Trajectory(vehicle_id, DT, states)


# ---------------------------------------------------------------------------
# macro library


def _junction_ahead(road: RoadMap, lane: Lane, s0: float):
    chain = walk_chain(road, lane, s0)
    if len(chain.junction_exits) >= 2 and chain.length <= JUNCTION_LOOKAHEAD:
        return chain
    return None


def available_macros(road: RoadMap, state: VehicleState) -> list[MacroAction]:
    """All macro-actions whose preconditions hold at `state`, name-sorted."""
    loc = road.locate(state.x, state.y, state.heading)
    if loc is None:
        return []
    lane, s0, lat = loc
    cache = road.__dict__.setdefault("_macro_cache", {})
    key = (lane.id, round(s0, 3), round(lat, 2))
    hit = cache.get(key)
    if hit is not None:
        return hit
    macros = _available_macros(road, lane, s0, lat)
    if len(cache) < 100000:
        cache[key] = macros
    return macros


def _available_macros(road: RoadMap, lane: Lane, s0: float,
                      lat: float = 0.0) -> list[MacroAction]:
    macros: list[MacroAction] = []
    chain = walk_chain(road, lane, s0)

    if chain.length >= 1.0:
        d = min(chain.length, CONTINUE_BLOCK)
        macros.append(MacroAction("continue_lane", (
            Maneuver("follow_lane", distance=d),)))

    for direction, name in (("left", "change_left"), ("right", "change_right")):
        nb = lane.left_neighbor if direction == "left" else lane.right_neighbor
        if nb is None:
            continue
        blend = blend_length_for(road, lane, s0, direction, lat)
        if lane.length - s0 >= blend + 1.0:
            target = road.lanes[nb]
            x0, y0 = lane.path.point_at(s0)
            t0, _ = target.path.project(x0, y0)
            if target.length - t0 >= blend + 1.0:
                macros.append(MacroAction(name, (
                    Maneuver("lane_change", direction=direction),)))

    junction = _junction_ahead(road, lane, s0)
    if junction is not None:
        entry_lane = road.lanes[junction.pieces[-1].lane_id]
        by_dir: dict[str, str] = {}
        for exit_id in junction.junction_exits:
            d = turn_direction(road, entry_lane, exit_id)
            if d not in by_dir:
                by_dir[d] = exit_id
        for d, macro_name in (("left", "exit_left"), ("right", "exit_right"),
                              ("straight", "follow_lane_to_exit")):
            if d in by_dir:
                exit_id = by_dir[d]
                watch = conflict_watch(road, entry_lane.id, exit_id)
                macros.append(MacroAction(macro_name, (
                    Maneuver("give_way", exit_lane=exit_id, watch=watch),
                    Maneuver("turn", exit_lane=exit_id),
                )))

    macros.append(MacroAction("stop_and_wait", (Maneuver("stop", duration=STOP_HOLD),)))
    return sorted(macros, key=lambda mc: mc.name)


def applicable(macro: MacroAction, state: VehicleState, road: RoadMap) -> bool:
    """True iff every maneuver's preconditions hold in sequence."""
    loc = road.locate(state.x, state.y, state.heading)
    if loc is None:
        return False
    lane, s0, lat = loc
    for mi, m0 in enumerate(macro.maneuvers):
        m = Maneuver(kind=m0.kind, lane=lane.id, start_s=s0,
                     start_lat=lat if mi == 0 else 0.0,
                     distance=m0.distance, direction=m0.direction,
                     exit_lane=m0.exit_lane, duration=m0.duration, watch=m0.watch)
        try:
            geo = resolve_geometry(road, m)
        except (InapplicableMacro, KeyError):
            return False
        if any(w not in road.lanes for w in m.watch):
            return False
        if geo.end_lane is None:
            return False
        lane = road.lanes[geo.end_lane]
        s0 = geo.end_lane_s
    return True
