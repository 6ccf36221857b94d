"""Shared tunables.

Physics runs at DT; the planner replans at CONTROL_PERIOD (10 physics steps).
Vehicle limits and controller gains are deliberately plain urban-driving
values; scenarios may override the ones exposed through ScenarioConfig.
"""

from dataclasses import dataclass

DT = 0.1                 # physics step, s
CONTROL_PERIOD = 1.0     # replanning period, s
STEPS_PER_CONTROL = 10

V_MAX = 14.0             # m/s
A_MIN = -5.0             # m/s^2
A_MAX = 3.0              # m/s^2

CAR_LENGTH = 4.0         # m
CAR_WIDTH = 1.8          # m
PED_SIZE = 0.6           # m (square footprint)

PATH_STEP = 0.5          # resampling spacing for reference paths, m
LANE_LOCATE_TOL = 2.0    # max lateral offset to count as "on" a lane, m
A_LAT_MAX = 2.0          # lateral acceleration cap in turns, m/s^2
BRAKE_COMFORT = 3.0      # decel used for braking-feasible profiles, m/s^2

KP_SPEED = 3.0           # proportional speed-tracking gain, 1/s
LOOKAHEAD = 0.5          # profile lookahead, m

TIME_GAP = 2.0           # cruise law headway, s
STANDOFF = 4.0           # cruise law standstill gap, m
ACC_GAIN = 1.5 / (TIME_GAP * TIME_GAP)
GUARD_DECEL = 4.0        # stopping-distance guard decel, m/s^2

BLEND_LENGTH = 20.0      # lane-change longitudinal distance, m
GIVE_WAY_MARGIN = 2.0    # extra clearance time when yielding, s
STOP_HOLD = 3.0          # stop_and_wait hold time, s
MANEUVER_TIME_CAP = 60.0 # non-termination guard, s

OCCLUDER_INFLATE = 0.2   # inflation of vehicle boxes in line-of-sight tests, m


@dataclass(frozen=True)
class VehicleLimits:
    v_max: float = V_MAX
    a_min: float = A_MIN
    a_max: float = A_MAX
    length: float = CAR_LENGTH
    width: float = CAR_WIDTH
