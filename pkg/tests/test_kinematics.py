import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gofisim.config import DT
from gofisim.kinematics import (
    BodyBox, Trajectory, TrajectoryError, VehicleState, collides, concat,
    is_kinematically_consistent, step, trajectory_collision,
)

STRAIGHT = ((0.0, 0.0), 0.0, 0.0)


def frame_at(x):
    return ((x, 0.0), 0.0, 0.0)


def test_step_constant_velocity_advances_one_meter():
    s = VehicleState((0, 0), 0.0, 10.0)
    out = step(s, 0.0, frame_at(0.0), dt=0.1)
    assert out.position[0] == pytest.approx(1.0)
    assert out.speed == pytest.approx(10.0)


def test_step_clamps_speed_at_zero():
    s = VehicleState((0, 0), 0.0, 1.0)
    out = step(s, -20.0, frame_at(0.0), dt=0.1)
    assert out.speed == 0.0


def test_step_uniform_acceleration_matches_closed_form():
    # d = a t^2 / 2 oracle over 50 steps of a = 2
    s = VehicleState((0, 0), 0.0, 0.0)
    x = 0.0
    for _ in range(50):
        s = step(s, 2.0, frame_at(x), dt=0.1)
        x = s.position[0]
    assert s.speed == pytest.approx(10.0, abs=1e-9)
    assert x == pytest.approx(25.0, rel=0.02)


def test_step_follows_constant_curvature_arc():
    r = 10.0
    s = VehicleState((r, 0.0), math.pi / 2, 5.0)
    for _ in range(100):
        frame = (s.position, s.heading, 1.0 / r)
        s = step(s, 0.0, frame, dt=0.1)
    assert math.hypot(*s.position) == pytest.approx(r, abs=1e-6)


def test_step_never_negative_speed_or_nan():
    s = VehicleState((0, 0), 0.3, 2.0)
    for a in (-50.0, 50.0, -3.3, 0.0):
        out = step(s, a, (s.position, s.heading, 0.01), dt=0.1)
        assert out.speed >= 0.0
        assert math.isfinite(out.position[0]) and math.isfinite(out.position[1])


def make_traj(xs, vid="v", speed=10.0):
    states = [VehicleState((x, 0.0), 0.0, speed) for x in xs]
    return Trajectory(vid, DT, states)


def test_concat_lengths():
    a = make_traj([i for i in range(10)], speed=10.0)
    b = make_traj([9 + i for i in range(20)], speed=10.0)
    joined = concat(a, b)
    assert len(joined) == 29


def test_concat_identity_with_single_state_suffix():
    a = make_traj([0, 1, 2])
    b = Trajectory("v", DT, [a.states[-1]])
    joined = concat(a, b)
    assert joined.states == a.states


def test_concat_rejects_mismatched_vehicle():
    a = make_traj([0, 1], vid="a")
    b = make_traj([1, 2], vid="b")
    with pytest.raises(TrajectoryError, match="vehicle"):
        concat(a, b)


def test_concat_rejects_discontinuous_join():
    a = make_traj([0, 1])
    b = make_traj([5, 6])
    with pytest.raises(TrajectoryError, match="join"):
        concat(a, b)


def test_concat_preserves_path_length():
    a = make_traj([0, 1, 2])
    b = make_traj([2, 3, 4, 5])
    joined = concat(a, b)
    assert joined.path_length() == pytest.approx(
        a.path_length() + b.path_length(), abs=1e-9)


def test_collides_identical_poses():
    s = VehicleState((3, 4), 0.7, 0.0)
    assert collides(s, BodyBox(), s, BodyBox())


def test_collides_far_apart():
    a = VehicleState((0, 0), 0.0, 0.0)
    b = VehicleState((100, 0), 0.0, 0.0)
    assert not collides(a, BodyBox(), b, BodyBox())


def test_collides_axis_aligned_interval_overlap():
    # 4 m long boxes 3.9 m apart along x overlap by the interval oracle
    a = VehicleState((0, 0), 0.0, 0.0)
    b = VehicleState((3.9, 0), 0.0, 0.0)
    box = BodyBox(4.0, 2.0)
    assert collides(a, box, b, box)
    c = VehicleState((4.1, 0), 0.0, 0.0)
    assert not collides(a, box, c, box)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(-20, 20), st.floats(-20, 20), st.floats(-math.pi, math.pi),
    st.floats(-20, 20), st.floats(-20, 20), st.floats(-math.pi, math.pi),
)
def test_collides_symmetric(ax, ay, ah, bx, by, bh):
    a = VehicleState((ax, ay), ah, 0.0)
    b = VehicleState((bx, by), bh, 0.0)
    box_a = BodyBox(4.0, 1.8)
    box_b = BodyBox(2.5, 1.1)
    assert collides(a, box_a, b, box_b) == collides(b, box_b, a, box_a)


def exhaustive_scan(ta, box_a, tb, box_b):
    for i in range(min(len(ta), len(tb))):
        if collides(ta.states[i], box_a, tb.states[i], box_b):
            return i
    return None


def test_trajectory_collision_parallel_lanes_clear():
    a = make_traj(range(30))
    b = Trajectory("w", DT, [VehicleState((x, 10.0), 0.0, 10.0) for x in range(30)])
    assert trajectory_collision(a, BodyBox(), b, BodyBox()) is None


def test_trajectory_collision_head_on_matches_exhaustive_scan():
    a = Trajectory("a", DT, [VehicleState((i * 1.0, 0.0), 0.0, 10.0) for i in range(40)])
    b = Trajectory("b", DT, [VehicleState((30 - i * 1.0, 0.0), math.pi, 10.0)
                             for i in range(40)])
    got = trajectory_collision(a, BodyBox(), b, BodyBox())
    want = exhaustive_scan(a, BodyBox(), b, BodyBox())
    assert got == want is not None


def test_trajectory_collision_single_state_overlap_is_index_zero():
    a = Trajectory("a", DT, [VehicleState((0, 0), 0.0, 0.0)])
    b = Trajectory("b", DT, [VehicleState((1, 0), 0.0, 0.0)])
    assert trajectory_collision(a, BodyBox(), b, BodyBox()) == 0


def test_trajectory_collision_speed_gate_skips_standstill_contact():
    parked = Trajectory("a", DT, [VehicleState((0, 0), 0.0, 0.0)] * 10)
    mover = Trajectory("b", DT, [VehicleState((5 - 0.8 * i, 0), math.pi, 8.0)
                                 for i in range(10)])
    assert trajectory_collision(parked, BodyBox(), mover, BodyBox()) is not None
    assert trajectory_collision(parked, BodyBox(), mover, BodyBox(),
                                speed_gate=0.5) is None


def test_trajectory_collision_hold_b_extends_last_pose():
    a = Trajectory("a", DT, [VehicleState((i * 1.0, 0), 0.0, 10.0) for i in range(30)])
    parked = Trajectory("b", DT, [VehicleState((25.0, 0), 0.0, 0.0)] * 2)
    assert trajectory_collision(a, BodyBox(), parked, BodyBox()) is None
    hit = trajectory_collision(a, BodyBox(), parked, BodyBox(), hold_b=True)
    assert hit is not None and hit > 2


def test_kinematic_consistency_of_stepped_trajectory():
    s = VehicleState((0, 0), 0.0, 5.0)
    states = [s]
    x = 0.0
    for i in range(60):
        s = step(s, 1.5 if i < 30 else -2.0, frame_at(x), dt=DT)
        x = s.position[0]
        states.append(s)
    assert is_kinematically_consistent(Trajectory("v", DT, states))


def test_trajectory_csv_schema(tmp_path):
    t = make_traj([0, 1, 2])
    out = tmp_path / "traj.csv"
    t.to_csv(out)
    header = out.read_text().splitlines()[0]
    assert header == "t,vehicle_id,x,y,heading,speed,accel"
