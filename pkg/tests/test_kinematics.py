import math

import numpy as np
import pytest

from fetchsim.geometry import Pose3D, rot_y
from fetchsim.kinematics import (
    ArmModel,
    JointLimitError,
    UnreachableTargetError,
    arm_joint_positions,
    base_to_shoulder,
    forward_kinematics,
    inverse_kinematics,
    shoulder_to_base,
    swivel_angle,
)
from fetchsim.model import RobotConfig

CFG = RobotConfig()
MODEL = ArmModel.from_config(CFG)


def test_home_pose_is_fully_extended():
    pose = forward_kinematics(MODEL, np.zeros(7))
    assert pose.position == pytest.approx((CFG.arm_reach, 0.0, 0.0))
    assert np.allclose(pose.matrix(), np.eye(3))


def test_elbow_ninety_matches_two_link_geometry():
    l1, l2, l3 = MODEL.link_lengths
    pose = forward_kinematics(MODEL, np.array([0, 0, 0, math.pi / 2, 0, 0, 0]))
    assert pose.position == pytest.approx((l1, 0.0, -(l2 + l3)))


def test_tool_never_exceeds_reach():
    rng = np.random.default_rng(1)
    lows = np.array([lo for lo, _ in MODEL.joint_limits])
    highs = np.array([hi for _, hi in MODEL.joint_limits])
    for _ in range(300):
        q = rng.uniform(lows, highs)
        pose = forward_kinematics(MODEL, q)
        assert np.linalg.norm(pose.position_array()) <= MODEL.reach + 1e-9


def test_ik_round_trip_over_reachable_targets():
    rng = np.random.default_rng(2)
    lows = np.array([lo for lo, _ in MODEL.joint_limits])
    highs = np.array([hi for _, hi in MODEL.joint_limits])
    worst = 0.0
    for _ in range(1000):
        q = rng.uniform(lows, highs)
        target = forward_kinematics(MODEL, q)
        q_sol = inverse_kinematics(MODEL, target, swivel_angle(MODEL, q))
        pose = forward_kinematics(MODEL, q_sol)
        err = np.linalg.norm(pose.position_array() - target.position_array())
        rot_err = np.abs(pose.matrix() - target.matrix()).max()
        worst = max(worst, err)
        assert err <= 1e-6
        assert rot_err <= 1e-6
    assert worst <= 1e-6


def test_ik_full_reach_is_straight_elbow():
    target = Pose3D((MODEL.reach, 0.0, 0.0))
    q = inverse_kinematics(MODEL, target, swivel=0.0)
    assert q[3] == pytest.approx(0.0, abs=1e-6)
    pose = forward_kinematics(MODEL, q)
    assert pose.position == pytest.approx((MODEL.reach, 0.0, 0.0), abs=1e-6)


def test_ik_unreachable_raises():
    with pytest.raises(UnreachableTargetError):
        inverse_kinematics(MODEL, Pose3D((MODEL.reach + 0.05, 0.0, 0.0)), 0.0)
    # Tool one wrist-link ahead of the shoulder puts the wrist center at the
    # singular origin.
    with pytest.raises(UnreachableTargetError):
        inverse_kinematics(MODEL, Pose3D((MODEL.link_lengths[2], 0.0, 0.0)), 0.0)


def test_ik_limit_violation_raises():
    # Reachable position, but the tool must point backward: the wrist
    # cannot fold that far inside the +/-100 deg limits.
    rot = rot_y(math.pi)
    target = Pose3D.from_matrix(rot, (0.45, 0.0, 0.0))
    with pytest.raises(JointLimitError):
        inverse_kinematics(MODEL, target, 0.0)


def test_swivel_parameterizes_elbow_circle():
    target = Pose3D.from_matrix(rot_y(0.4), (0.45, 0.05, -0.15))
    elbows = []
    for sw in (-0.6, 0.0, 0.6):
        q = inverse_kinematics(MODEL, target, sw)
        assert swivel_angle(MODEL, q) == pytest.approx(sw, abs=1e-9)
        positions = arm_joint_positions(MODEL, q)
        elbows.append(positions[1])
        pose = forward_kinematics(MODEL, q)
        assert np.linalg.norm(pose.position_array() - target.position_array()) <= 1e-9
    assert np.linalg.norm(elbows[0] - elbows[1]) > 1e-3
    assert np.linalg.norm(elbows[1] - elbows[2]) > 1e-3


def test_home_configuration_has_zero_swivel():
    assert swivel_angle(MODEL, np.zeros(7)) == pytest.approx(0.0)


def test_shoulder_mount_round_trip():
    pose = Pose3D.from_matrix(rot_y(0.3), (0.5, 0.1, -0.2))
    for side in ("left", "right"):
        back = base_to_shoulder(MODEL, side, shoulder_to_base(MODEL, side, pose))
        assert np.allclose(back.position_array(), pose.position_array())
        assert np.abs(back.matrix() - pose.matrix()).max() < 1e-12


def test_mounts_are_mirrored():
    right = MODEL.shoulder_mounts["right"].position
    left = MODEL.shoulder_mounts["left"].position
    assert right[1] == pytest.approx(CFG.shoulder_offset)
    assert left[1] == pytest.approx(-CFG.shoulder_offset)
    assert right[2] == left[2] == pytest.approx(CFG.shoulder_height)
