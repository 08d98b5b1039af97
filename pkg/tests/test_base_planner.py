import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fetchsim.base_planner import (
    approach_controller,
    arrival_offset_pose,
    plan_base_trajectory,
    scale_lateral_velocity,
    shoulder_lateral_offset,
)
from fetchsim.geometry import Pose2D
from fetchsim.model import RobotConfig, VelocityScalingLimits

CFG = RobotConfig()
LIMITS = VelocityScalingLimits(vy_min=0.1, vy_max=0.7, y_min=0.0, y_max=1.0)


# --- scale_lateral_velocity -------------------------------------------------

def test_scaling_endpoints():
    assert scale_lateral_velocity(LIMITS.y_min, LIMITS) == pytest.approx(0.1)
    assert scale_lateral_velocity(LIMITS.y_max, LIMITS) == pytest.approx(0.7)


def test_scaling_midpoint():
    assert scale_lateral_velocity(0.5, LIMITS) == pytest.approx(0.4)


def test_scaling_clamps_outside_window():
    assert scale_lateral_velocity(-2.0, LIMITS) == pytest.approx(0.1)
    assert scale_lateral_velocity(5.0, LIMITS) == pytest.approx(0.7)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_scaling_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    assert scale_lateral_velocity(lo, LIMITS) <= scale_lateral_velocity(hi, LIMITS) + 1e-12


def test_scaling_affine_on_interior():
    ys = np.linspace(0.1, 0.9, 9)
    vals = [scale_lateral_velocity(y, LIMITS) for y in ys]
    diffs = np.diff(vals)
    assert np.allclose(diffs, diffs[0], atol=1e-12)


# --- plan_base_trajectory ---------------------------------------------------

def test_trajectory_boundary_conditions():
    traj = plan_base_trajectory(Pose2D(0, 0, 0), Pose2D(2, 0, 0), CFG)
    first, last = traj.samples[0], traj.samples[-1]
    assert first.t == 0.0
    assert (first.pose.x, first.pose.y) == (0.0, 0.0)
    assert (last.pose.x, last.pose.y) == (2.0, 0.0)
    assert math.hypot(*first.velocity[:2]) == pytest.approx(0.0)
    assert math.hypot(*last.velocity[:2]) == pytest.approx(0.0)


def test_trajectory_reaches_operational_speed():
    traj = plan_base_trajectory(Pose2D(0, 0, 0), Pose2D(4, 1, 0), CFG)
    assert traj.speeds().max() == pytest.approx(0.694, abs=1e-6)
    assert traj.speeds().max() <= CFG.base_v_max + 1e-9


def test_trajectory_displacement_matches_speed_integral():
    traj = plan_base_trajectory(Pose2D(1, 1, 0.2), Pose2D(3.5, 2.2, -0.4), CFG)
    times = np.array([s.t for s in traj.samples])
    speeds = traj.speeds()
    distance = math.hypot(3.5 - 1.0, 2.2 - 1.0)
    integral = float(np.trapezoid(speeds, times))
    assert integral == pytest.approx(distance, abs=1e-4)


def test_trajectory_short_distance_uses_triangular_profile():
    traj = plan_base_trajectory(Pose2D(0, 0, 0), Pose2D(0.3, 0, 0), CFG)
    peak = traj.speeds().max()
    assert peak < CFG.base_v_operational
    assert peak == pytest.approx(math.sqrt(0.3 * CFG.base_a_peak), rel=1e-3)
    assert traj.samples[-1].pose.x == pytest.approx(0.3)


def test_trajectory_acceleration_bounded_by_cosine_ramp_peak():
    traj = plan_base_trajectory(Pose2D(0, 0, 0), Pose2D(3, 0, 0), CFG)
    times = np.array([s.t for s in traj.samples])
    speeds = traj.speeds()
    accel = np.abs(np.diff(speeds) / np.diff(times))
    ramp_peak = CFG.base_v_operational * math.pi / (2 * (CFG.base_v_operational / CFG.base_a_peak))
    assert accel.max() <= 1.05 * ramp_peak


def test_trajectory_path_is_collinear():
    start, goal = Pose2D(0.5, -1.0, 0), Pose2D(2.5, 3.0, 1.0)
    traj = plan_base_trajectory(start, goal, CFG)
    d = np.array([goal.x - start.x, goal.y - start.y])
    d = d / np.linalg.norm(d)
    for s in traj.samples:
        r = np.array([s.pose.x - start.x, s.pose.y - start.y])
        cross = abs(r[0] * d[1] - r[1] * d[0])
        assert cross < 1e-9


def test_trajectory_heading_eases_to_goal():
    traj = plan_base_trajectory(Pose2D(0, 0, 0.0), Pose2D(2, 0, 1.0), CFG)
    assert traj.samples[0].pose.theta == pytest.approx(0.0)
    assert traj.samples[-1].pose.theta == pytest.approx(1.0)
    thetas = np.array([s.pose.theta for s in traj.samples])
    assert (np.diff(thetas) >= -1e-12).all()


def test_trajectory_time_reversal_is_valid():
    start, goal = Pose2D(0, 0, 0), Pose2D(2, 1, 0.5)
    traj = plan_base_trajectory(start, goal, CFG)
    T = traj.duration
    rev_t = [T - s.t for s in reversed(traj.samples)]
    rev_pose = [s.pose for s in reversed(traj.samples)]
    assert rev_t[0] == 0.0 and rev_t[-1] == T
    assert all(b > a for a, b in zip(rev_t, rev_t[1:]))
    assert (rev_pose[0].x, rev_pose[0].y) == (goal.x, goal.y)
    assert (rev_pose[-1].x, rev_pose[-1].y) == (start.x, start.y)
    rev_speeds = traj.speeds()[::-1]
    assert rev_speeds.max() <= CFG.base_v_max + 1e-9
    assert rev_speeds[0] == pytest.approx(0.0) and rev_speeds[-1] == pytest.approx(0.0)


def test_trajectory_zero_distance_rejected():
    with pytest.raises(ValueError):
        plan_base_trajectory(Pose2D(1, 1, 0), Pose2D(1, 1, 0.5), CFG)


def test_trajectory_deterministic():
    a = plan_base_trajectory(Pose2D(0, 0, 0), Pose2D(2, 1, 0.3), CFG)
    b = plan_base_trajectory(Pose2D(0, 0, 0), Pose2D(2, 1, 0.3), CFG)
    assert a == b


# --- approach_controller ----------------------------------------------------

def test_approach_aligned_object_gets_vy_min():
    robot = Pose2D(-2.0, 0.0, 0.0)
    cmd = approach_controller(robot, object_y=0.25, limits=LIMITS, arm_offset=0.25, cfg=CFG)
    assert cmd.v_lateral == pytest.approx(LIMITS.vy_min)


def test_approach_is_pure():
    robot = Pose2D(-1.2, 0.1, 0.0)
    a = approach_controller(robot, 0.4, LIMITS, 0.25, CFG)
    b = approach_controller(robot, 0.4, LIMITS, 0.25, CFG)
    assert a == b


def test_approach_forward_speed_tapers_near_standoff():
    far = approach_controller(Pose2D(-2.0, 0, 0), 0.0, LIMITS, 0.0, CFG)
    near = approach_controller(Pose2D(-CFG.grasp_standoff - 0.1, 0, 0), 0.0, LIMITS, 0.0, CFG)
    at_line = approach_controller(Pose2D(-CFG.grasp_standoff, 0, 0), 0.0, LIMITS, 0.0, CFG)
    assert far.v_forward == pytest.approx(CFG.base_v_operational)
    assert 0 < near.v_forward < CFG.base_v_operational
    assert at_line.v_forward == pytest.approx(0.0)


def test_approach_lateral_sign_points_at_object():
    left = approach_controller(Pose2D(-2, 0, 0), -0.4, LIMITS, 0.0, CFG)
    right = approach_controller(Pose2D(-2, 0, 0), 0.4, LIMITS, 0.0, CFG)
    assert left.v_lateral < 0 < right.v_lateral


def test_approach_closed_loop_converges_to_manipulator_alignment():
    # Independent integration oracle at the control tick: from 2 m out the
    # manipulator line must end within 2 cm of the object's lateral position.
    cfg = CFG
    limits = VelocityScalingLimits(vy_min=0.0, vy_max=0.5, y_min=0.0, y_max=1.0)
    arm_offset = shoulder_lateral_offset("right", cfg)
    # Object frame: object at the origin; start 2 m back with the manipulator
    # line 0.15 m off (navigation leaves at most a few cm of misalignment).
    x, y = -2.0 - cfg.grasp_standoff, 0.15 - arm_offset
    for _ in range(int(60.0 / cfg.control_tick)):
        robot = Pose2D(x, y, 0.0)
        object_y_robot = -y
        cmd = approach_controller(robot, object_y_robot, limits, arm_offset, cfg)
        remaining = -cfg.grasp_standoff - x
        if remaining <= 0.005:
            break
        x += cmd.v_forward * cfg.control_tick
        y += cmd.v_lateral * cfg.control_tick
    manipulator_y = y + arm_offset
    assert abs(manipulator_y - 0.0) <= 0.02
    assert abs(x - (-cfg.grasp_standoff)) <= 0.01


# --- arrival_offset_pose ----------------------------------------------------

def test_arrival_offset_matches_rigid_arithmetic():
    cfg = RobotConfig(grasp_standoff=0.55, shoulder_offset=0.25)
    goal = arrival_offset_pose((3.0, 2.0), "right", cfg)
    assert goal.x == pytest.approx(3.0 - 0.55)
    assert goal.y == pytest.approx(2.0 - 0.25)
    assert goal.theta == pytest.approx(0.0)


def test_arrival_offset_left_right_mirror():
    cfg = RobotConfig()
    right = arrival_offset_pose((3.0, 2.0), "right", cfg)
    left = arrival_offset_pose((3.0, 2.0), "left", cfg)
    assert right.x == pytest.approx(left.x)
    assert (right.y + left.y) / 2 == pytest.approx(2.0)


def test_arrival_offset_keeps_object_reachable():
    cfg = RobotConfig()
    rng = np.random.default_rng(7)
    for _ in range(100):
        obj = rng.uniform(1.0, 7.0, size=2)
        theta = rng.uniform(-math.pi, math.pi)
        arm = "right" if rng.random() < 0.5 else "left"
        goal = arrival_offset_pose(obj, arm, cfg, approach_theta=theta)
        shoulder_local = np.array([0.0, shoulder_lateral_offset(arm, cfg)])
        shoulder_world = goal.transform_to_world(shoulder_local)
        horizontal = np.linalg.norm(shoulder_world - obj)
        assert horizontal == pytest.approx(cfg.grasp_standoff, abs=1e-9)
        # with a tabletop object the 3D shoulder-object distance stays in reach
        vertical = cfg.shoulder_height - 0.81
        assert math.hypot(horizontal, vertical) <= cfg.arm_reach


def test_arrival_offset_unknown_arm():
    with pytest.raises(ValueError):
        arrival_offset_pose((1.0, 1.0), "center", RobotConfig())
