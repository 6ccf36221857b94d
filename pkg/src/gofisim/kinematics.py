"""Vehicle states, trajectories, the point-kinematic step, collision checks.

The motion model is path-following: speed integrates the (clamped)
acceleration command, position advances along a constant-curvature arc of the
supplied path frame, and heading is slaved to the path tangent.  Lateral
dynamics are not modeled.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernels
from .config import CAR_LENGTH, CAR_WIDTH, DT, V_MAX


@dataclass(frozen=True)
class VehicleState:
    position: tuple[float, float]
    heading: float          # radians in [-pi, pi)
    speed: float            # m/s, >= 0
    acceleration: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", kernels.wrap_angle(self.heading))
        if self.speed < 0:
            raise ValueError("speed must be >= 0")

    @property
    def x(self) -> float:
        return self.position[0]

    @property
    def y(self) -> float:
        return self.position[1]


@dataclass(frozen=True)
class BodyBox:
    length: float = CAR_LENGTH
    width: float = CAR_WIDTH

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0:
            raise ValueError("body box dimensions must be positive")


@dataclass
class JointState:
    vehicles: dict[str, VehicleState]
    timestamp: float = 0.0

    def copy(self) -> "JointState":
        return JointState(dict(self.vehicles), self.timestamp)


class TrajectoryError(ValueError):
    pass


@dataclass
class Trajectory:
    vehicle_id: str
    dt: float
    states: list[VehicleState]

    def __post_init__(self):
        if self.dt <= 0:
            raise TrajectoryError("dt must be positive")
        if not self.states:
            raise TrajectoryError("trajectory needs at least one state")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def duration(self) -> float:
        return (len(self.states) - 1) * self.dt

    def path_length(self) -> float:
        total = 0.0
        for a, b in zip(self.states, self.states[1:]):
            total += math.hypot(b.x - a.x, b.y - a.y)
        return total

    def state_at(self, index: int, hold: bool = True) -> VehicleState:
        if hold:
            index = min(max(index, 0), len(self.states) - 1)
        return self.states[index]

    def pose_arrays(self):
        """Contiguous (x, y, heading, speed) float64 arrays for the kernels.

        Cached: trajectories are treated as immutable once built.
        """
        cached = getattr(self, "_pose_arrays", None)
        if cached is not None and cached[4] == len(self.states):
            return cached[:4]
        n = len(self.states)
        x = np.empty(n)
        y = np.empty(n)
        h = np.empty(n)
        v = np.empty(n)
        for i, st in enumerate(self.states):
            x[i] = st.x
            y[i] = st.y
            h[i] = st.heading
            v[i] = st.speed
        self._pose_arrays = (x, y, h, v, n)
        return x, y, h, v

    def positions(self) -> np.ndarray:
        return np.array([[st.x, st.y] for st in self.states])

    def to_csv(self, path, t0: float = 0.0):
        """Export with columns t,vehicle_id,x,y,heading,speed,accel."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "vehicle_id", "x", "y", "heading", "speed", "accel"])
            for i, st in enumerate(self.states):
                w.writerow([
                    f"{t0 + i * self.dt:.3f}", self.vehicle_id,
                    f"{st.x:.6f}", f"{st.y:.6f}", f"{st.heading:.6f}",
                    f"{st.speed:.6f}", f"{st.acceleration:.6f}",
                ])


def is_kinematically_consistent(traj: Trajectory, tol: float = 0.2,
                                accel_slack: float = 6.0) -> bool:
    """Sanity bound: per-step displacement matches mean speed within tol,
    plus an absolute slack covering one step of acceleration change."""
    slack0 = 0.5 * accel_slack * traj.dt * traj.dt
    for a, b in zip(traj.states, traj.states[1:]):
        dist = math.hypot(b.x - a.x, b.y - a.y)
        expect = 0.5 * (a.speed + b.speed) * traj.dt
        if abs(dist - expect) > tol * expect + slack0:
            return False
    return True


def step(state: VehicleState, accel_cmd: float, path_frame, dt: float = DT,
         v_max: float = V_MAX) -> VehicleState:
    """One path-following step from the frame at the vehicle's arclength.

    Speed integrates the command, clamped to [0, v_max] (no reverse); the
    position advances the trapezoidal distance along the frame's
    constant-curvature arc; heading follows the tangent.  Acceleration
    bounds are the command generator's concern, not enforced here.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    (fx, fy), fh, fk = path_frame
    v2 = min(max(state.speed + accel_cmd * dt, 0.0), v_max)
    ds = 0.5 * (state.speed + v2) * dt
    if abs(fk) < 1e-9:
        x = fx + math.cos(fh) * ds
        y = fy + math.sin(fh) * ds
        h2 = fh
    else:
        h2 = fh + fk * ds
        r = 1.0 / fk
        x = fx + r * (math.sin(h2) - math.sin(fh))
        y = fy - r * (math.cos(h2) - math.cos(fh))
    return VehicleState((x, y), kernels.wrap_angle(h2), v2, (v2 - state.speed) / dt)


def concat(prefix: Trajectory, suffix: Trajectory, tol: float = 0.5) -> Trajectory:
    """Join two trajectories, dropping the duplicated seam state."""
    if prefix.vehicle_id != suffix.vehicle_id:
        raise TrajectoryError(
            f"vehicle mismatch: {prefix.vehicle_id} vs {suffix.vehicle_id}")
    if abs(prefix.dt - suffix.dt) > 1e-12:
        raise TrajectoryError(f"dt mismatch: {prefix.dt} vs {suffix.dt}")
    a = prefix.states[-1]
    b = suffix.states[0]
    if math.hypot(a.x - b.x, a.y - b.y) > tol:
        raise TrajectoryError(
            f"discontinuous join: {a.position} -> {b.position} exceeds {tol} m")
    return Trajectory(prefix.vehicle_id, prefix.dt, prefix.states + suffix.states[1:])


def collides(a: VehicleState, box_a: BodyBox, b: VehicleState, box_b: BodyBox) -> bool:
    """Oriented-rectangle overlap (separating axis)."""
    return kernels.obb_overlap(
        a.x, a.y, a.heading, box_a.length / 2, box_a.width / 2,
        b.x, b.y, b.heading, box_b.length / 2, box_b.width / 2,
    )


def trajectory_collision(traj_a: Trajectory, box_a: BodyBox,
                         traj_b: Trajectory, box_b: BodyBox,
                         b_offset: int = 0, hold_b: bool = False,
                         speed_gate: float = -1.0) -> Optional[int]:
    """First index of traj_a whose pose overlaps the matching pose of traj_b.

    Indexes are compared one-to-one (shifted by b_offset); with hold_b the
    final pose of traj_b persists past its end.  A nonnegative speed_gate
    skips overlaps while traj_a moves at or below it (used when scanning a
    plan against hypothesized traffic: an entity bumping into a standstill
    vehicle does not invalidate the plan).
    """
    if abs(traj_a.dt - traj_b.dt) > 1e-12:
        raise TrajectoryError("trajectories must share dt")
    xa, ya, ha, va = traj_a.pose_arrays()
    xb, yb, hb, _ = traj_b.pose_arrays()
    idx = kernels.first_collision(
        xa, ya, ha, va, box_a.length / 2, box_a.width / 2,
        xb, yb, hb, box_b.length / 2, box_b.width / 2,
        b_offset, hold_b, speed_gate,
    )
    return None if idx < 0 else int(idx)
