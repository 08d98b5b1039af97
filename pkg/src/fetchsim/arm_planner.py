"""Arm trajectory generation: deterministic 1-cosine profiles plus a
sampling-based baseline, with offline capsule-vs-box collision verification.

The deterministic planner routes through a pre-grasp waypoint and
interpolates each joint with a synchronized 1-cosine profile whose duration
is the minimum that keeps every joint under its velocity limit.  The
baseline is a bidirectional joint-space tree search (RRT-Connect style) with
shortcut smoothing, kept around to benchmark path quality and planning
reliability against the deterministic generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Pose2D, Pose3D
from .kinematics import (
    ArmModel,
    arm_joint_positions,
    forward_kinematics,
    inverse_kinematics,
)
from .model import RobotConfig, WorldModel

# Deterministic iteration allowance per second of planning budget; keeps
# seeded runs bit-identical regardless of host speed.
BASELINE_ITERS_PER_SECOND = 2000
BASELINE_STEP = 0.2        # rad, joint-space extension step
BASELINE_GOAL_BIAS = 0.05
EDGE_RESOLUTION = 0.05     # rad, collision-check spacing along edges
SHORTCUT_MAX_ATTEMPTS = 8  # bounded post-smoothing passes

LINK_NAMES = ("upper_arm", "forearm", "hand")


@dataclass(frozen=True)
class ArmTrajectory:
    """Sampled joint trajectory: times (N,), positions (N, 7)."""

    times: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        q = np.asarray(self.positions, dtype=float)
        if q.ndim != 2 or q.shape[1] != 7 or t.shape != (q.shape[0],):
            raise ValueError("need times (N,) and positions (N, 7)")
        if len(t) == 0:
            raise ValueError("trajectory must contain at least one sample")
        if len(t) > 1 and not (np.diff(t) > 0).all():
            raise ValueError("times must be strictly increasing")
        t = t.copy()
        q = q.copy()
        t.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", q)

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return len(self.times)


def _segment_duration(dq: np.ndarray, vel_limits) -> float:
    """Minimal 1-cosine segment time keeping peak joint speeds at limit."""
    limits = np.asarray(vel_limits, dtype=float)
    return float(np.max(math.pi * np.abs(dq) / (2.0 * limits)))


def _sample_times(duration: float, tick: float) -> np.ndarray:
    n = int(math.floor(duration / tick + 1e-9))
    times = [i * tick for i in range(n + 1)]
    if duration - times[-1] > 1e-9:
        times.append(duration)
    else:
        times[-1] = duration
    return np.array(times)


def plan_joint_profile(q_from, q_to, vel_limits, tick: float) -> ArmTrajectory:
    """Single synchronized 1-cosine segment between two configurations."""
    q0 = np.asarray(q_from, dtype=float)
    q1 = np.asarray(q_to, dtype=float)
    dq = q1 - q0
    duration = _segment_duration(dq, vel_limits)
    if duration <= 0.0:
        return ArmTrajectory(np.array([0.0]), q0[None, :])
    times = _sample_times(duration, tick)
    blend = (1.0 - np.cos(math.pi * times / duration)) / 2.0
    return ArmTrajectory(times, q0[None, :] + blend[:, None] * dq[None, :])


def _concat_profiles(waypoints: list[np.ndarray], vel_limits, tick: float) -> ArmTrajectory:
    times = [np.array([0.0])]
    positions = [waypoints[0][None, :]]
    offset = 0.0
    for q0, q1 in zip(waypoints[:-1], waypoints[1:]):
        seg = plan_joint_profile(q0, q1, vel_limits, tick)
        if seg.duration <= 0.0:
            continue
        times.append(seg.times[1:] + offset)
        positions.append(seg.positions[1:])
        offset += seg.duration
    return ArmTrajectory(np.concatenate(times), np.vstack(positions))


def pre_grasp_pose(target: Pose3D, backoff: float) -> Pose3D:
    """Target backed off along the tool approach axis."""
    approach = target.matrix() @ np.array([1.0, 0.0, 0.0])
    return Pose3D(
        tuple(target.position_array() - backoff * approach), target.orientation
    )


def plan_arm_trajectory(
    model: ArmModel,
    q_start,
    target: Pose3D,
    cfg: RobotConfig,
    swivel: float | None = None,
) -> ArmTrajectory:
    """Deterministic grasp trajectory through a pre-grasp waypoint.

    Waypoints are [start, IK(pre-grasp), IK(target)], each segment a
    minimal-duration synchronized 1-cosine profile sampled at control_tick.
    When the arm already rests at the target configuration the result is a
    single zero-duration sample.
    """
    q0 = np.asarray(q_start, dtype=float)
    bad = model.check_limits(q0)
    if bad:
        raise ValueError(f"q_start violates limits of joints {[j + 1 for j in bad]}")
    if swivel is None:
        swivel = cfg.swivel
    q_grasp = inverse_kinematics(model, target, swivel)
    if np.abs(q_grasp - q0).max() < 1e-12:
        return ArmTrajectory(np.array([0.0]), q0[None, :])
    q_pre = inverse_kinematics(model, pre_grasp_pose(target, cfg.pre_grasp_backoff), swivel)
    return _concat_profiles([q0, q_pre, q_grasp], model.joint_vel_limits, cfg.control_tick)


def ee_path_positions(model: ArmModel, traj: ArmTrajectory) -> np.ndarray:
    """(N, 3) tool positions in the shoulder frame along a trajectory."""
    return np.vstack([arm_joint_positions(model, q)[3] for q in traj.positions])


def select_arm(object_xy, robot: Pose2D) -> str:
    """Arm whose shoulder is nearer the object; ties go right."""
    lateral = robot.transform_to_local(np.asarray(object_xy, dtype=float))[1]
    return "right" if lateral >= 0.0 else "left"


# ---------------------------------------------------------------------------
# Collision checking


def _base_to_world(points: np.ndarray, base_pose: Pose2D) -> np.ndarray:
    out = points.copy()
    rot = base_pose.rotation()
    out[:, :2] = points[:, :2] @ rot.T + base_pose.position()
    return out


def _point_box_distance(p: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    d = np.maximum(np.maximum(lo - p, 0.0), p - hi)
    return float(np.linalg.norm(d))


def _segment_box_distance(a: np.ndarray, b: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    """Min distance from segment ab to an AABB (convex, ternary search)."""
    t0, t1 = 0.0, 1.0
    for _ in range(48):
        m1 = t0 + (t1 - t0) / 3.0
        m2 = t1 - (t1 - t0) / 3.0
        d1 = _point_box_distance(a + m1 * (b - a), lo, hi)
        d2 = _point_box_distance(a + m2 * (b - a), lo, hi)
        if d1 < d2:
            t1 = m2
        else:
            t0 = m1
    mid = (t0 + t1) / 2.0
    return min(
        _point_box_distance(a, lo, hi),
        _point_box_distance(b, lo, hi),
        _point_box_distance(a + mid * (b - a), lo, hi),
    )


def _config_collisions(
    q: np.ndarray,
    model: ArmModel,
    side: str,
    world: WorldModel,
    base_pose: Pose2D,
    radius: float,
) -> list[tuple[str, str]]:
    mount = model.shoulder_mounts[side]
    joints_shoulder = arm_joint_positions(model, q)
    joints_base = mount.transform_points(joints_shoulder)
    joints_world = _base_to_world(joints_base, base_pose)
    hits = []
    for i, name in enumerate(LINK_NAMES):
        a, b = joints_world[i], joints_world[i + 1]
        seg_lo = np.minimum(a, b) - radius
        seg_hi = np.maximum(a, b) + radius
        for box in world.furniture:
            lo, hi = box.bounds()
            if (seg_hi < lo).any() or (seg_lo > hi).any():
                continue
            if _segment_box_distance(a, b, lo, hi) <= radius:
                hits.append((name, box.name))
    return hits


def config_in_collision(
    q, model: ArmModel, side: str, world: WorldModel, base_pose: Pose2D, radius: float
) -> bool:
    return bool(_config_collisions(np.asarray(q, float), model, side, world, base_pose, radius))


def verify_collision_free(
    traj: ArmTrajectory,
    model: ArmModel,
    world: WorldModel,
    base_pose: Pose2D,
    side: str = "right",
    radius: float = 0.05,
) -> list[tuple[float, tuple[str, str]]]:
    """Sweep a sampled trajectory for capsule-vs-furniture contacts.

    Checks every sample (the control-tick resolution); an empty list means
    the trajectory is verified collision-free.  Meant for offline scenario
    tuning, never called inside the run-time planner.
    """
    contacts = []
    for t, q in zip(traj.times, traj.positions):
        for pair in _config_collisions(q, model, side, world, base_pose, radius):
            contacts.append((float(t), pair))
    return contacts


# ---------------------------------------------------------------------------
# Sampling-based baseline planner


def _edge_free(q0, q1, collision_fn) -> bool:
    dist = float(np.linalg.norm(q1 - q0))
    n = max(1, int(math.ceil(dist / EDGE_RESOLUTION)))
    for i in range(1, n + 1):
        if collision_fn(q0 + (q1 - q0) * (i / n)):
            return False
    return True


def plan_arm_sampling_baseline(
    model: ArmModel,
    q_start,
    target: Pose3D,
    world: WorldModel,
    budget: float,
    seed: int,
    base_pose: Pose2D | None = None,
    side: str = "right",
    radius: float = 0.05,
    tick: float = 0.005,
    swivel: float = 0.0,
) -> ArmTrajectory | None:
    """Bidirectional joint-space tree search with shortcut smoothing.

    The time budget is converted into a deterministic iteration allowance
    (BASELINE_ITERS_PER_SECOND) so that a given seed always yields the same
    plan.  Returns None when the budget runs out before the trees connect -
    the caller records that as a planning failure.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    if base_pose is None:
        base_pose = Pose2D(0.0, 0.0, 0.0)
    q0 = np.asarray(q_start, dtype=float)
    try:
        q_goal = inverse_kinematics(model, target, swivel)
    except ValueError:
        return None

    def in_collision(q) -> bool:
        return config_in_collision(q, model, side, world, base_pose, radius)

    if in_collision(q0) or in_collision(q_goal):
        return None

    max_iters = max(1, int(budget * BASELINE_ITERS_PER_SECOND))
    rng = np.random.default_rng(seed)
    lows = np.array([lo for lo, _ in model.joint_limits])
    highs = np.array([hi for _, hi in model.joint_limits])

    trees: list[dict] = [
        {"nodes": [q0], "parents": [-1]},
        {"nodes": [q_goal], "parents": [-1]},
    ]

    def nearest(tree, q) -> int:
        nodes = np.vstack(tree["nodes"])
        return int(np.argmin(np.linalg.norm(nodes - q, axis=1)))

    def extend(tree, q_target) -> tuple[str, int]:
        idx = nearest(tree, q_target)
        q_near = tree["nodes"][idx]
        delta = q_target - q_near
        dist = float(np.linalg.norm(delta))
        if dist < 1e-12:
            return "reached", idx
        q_new = q_target if dist <= BASELINE_STEP else q_near + delta / dist * BASELINE_STEP
        if not _edge_free(q_near, q_new, in_collision):
            return "trapped", idx
        tree["nodes"].append(q_new)
        tree["parents"].append(idx)
        new_idx = len(tree["nodes"]) - 1
        status = "reached" if dist <= BASELINE_STEP else "advanced"
        return status, new_idx

    path = None
    iters_used = 0
    for it in range(max_iters):
        iters_used = it + 1
        a, b = trees[it % 2], trees[(it + 1) % 2]
        if rng.random() < BASELINE_GOAL_BIAS:
            q_rand = b["nodes"][0]
        else:
            q_rand = rng.uniform(lows, highs)
        status, new_idx = extend(a, q_rand)
        if status == "trapped":
            continue
        # Greedily connect the other tree to the new node.
        q_new = a["nodes"][new_idx]
        status, connect_idx = extend(b, q_new)
        while status == "advanced":
            status, connect_idx = extend(b, q_new)
        if status == "reached":
            part_a = _trace(a, new_idx)
            part_b = _trace(b, connect_idx)
            if it % 2 == 0:
                path = part_a[::-1] + part_b
            else:
                path = part_b[::-1] + part_a
            break
    if path is None:
        return None

    # Bounded shortcut smoothing within the leftover iteration budget.
    for _ in range(min(SHORTCUT_MAX_ATTEMPTS, max(0, max_iters - iters_used))):
        if len(path) <= 2:
            break
        i, j = sorted(rng.integers(0, len(path), size=2))
        if j - i < 2:
            continue
        if _edge_free(path[i], path[j], in_collision):
            path = path[: i + 1] + path[j:]

    waypoints = [np.asarray(q) for q in path]
    return _concat_profiles(waypoints, model.joint_vel_limits, tick)


def _trace(tree: dict, idx: int) -> list[np.ndarray]:
    out = []
    while idx >= 0:
        out.append(tree["nodes"][idx])
        idx = tree["parents"][idx]
    return out
