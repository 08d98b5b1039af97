"""2D base trajectory generation and the tracked-approach velocity law.

Point-to-point motions use a straight-line path with a trapezoidal speed
profile whose acceleration and deceleration segments are 1-cosine ramps
(C1-continuous velocity, zero boundary speed).  While approaching a tracked
object the lateral velocity follows a clamped linear scaling law so that the
selected manipulator, not the base center, lines up with the object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Pose2D, normalize_angle
from .model import RobotConfig, VelocityScalingLimits


@dataclass(frozen=True)
class BaseSample:
    t: float
    pose: Pose2D
    velocity: tuple[float, float, float]  # vx, vy (world frame), omega


@dataclass(frozen=True)
class BaseTrajectory:
    samples: tuple[BaseSample, ...]

    @property
    def duration(self) -> float:
        return self.samples[-1].t if self.samples else 0.0

    def speeds(self) -> np.ndarray:
        return np.array([math.hypot(s.velocity[0], s.velocity[1]) for s in self.samples])


@dataclass(frozen=True)
class ApproachCommand:
    v_forward: float
    v_lateral: float


def scale_lateral_velocity(y_obj: float, limits: VelocityScalingLimits) -> float:
    """Linear lateral-speed law, clamped to [vy_min, vy_max]."""
    y = min(max(y_obj, limits.y_min), limits.y_max)
    frac = (y - limits.y_min) / (limits.y_max - limits.y_min)
    return limits.vy_min + (limits.vy_max - limits.vy_min) * frac


def _cosine_ramp_distance(v_cruise: float, t_ramp: float) -> float:
    # integral of v_cruise*(1-cos(pi t/T))/2 over one ramp
    return v_cruise * t_ramp / 2.0


def _profile_speed(t: float, v_cruise: float, t_ramp: float, t_total: float) -> float:
    if t <= 0.0 or t >= t_total:
        return 0.0
    if t < t_ramp:
        return v_cruise * (1.0 - math.cos(math.pi * t / t_ramp)) / 2.0
    if t > t_total - t_ramp:
        return v_cruise * (1.0 - math.cos(math.pi * (t_total - t) / t_ramp)) / 2.0
    return v_cruise


def _profile_distance(t: float, v_cruise: float, t_ramp: float, t_total: float) -> float:
    ramp_d = _cosine_ramp_distance(v_cruise, t_ramp)
    if t <= 0.0:
        return 0.0
    if t >= t_total:
        return 2.0 * ramp_d + v_cruise * (t_total - 2.0 * t_ramp)
    if t < t_ramp:
        return v_cruise / 2.0 * (t - t_ramp / math.pi * math.sin(math.pi * t / t_ramp))
    if t <= t_total - t_ramp:
        return ramp_d + v_cruise * (t - t_ramp)
    tau = t_total - t
    tail = v_cruise / 2.0 * (tau - t_ramp / math.pi * math.sin(math.pi * tau / t_ramp))
    return 2.0 * ramp_d + v_cruise * (t_total - 2.0 * t_ramp) - tail


def plan_base_trajectory(start: Pose2D, goal: Pose2D, cfg: RobotConfig) -> BaseTrajectory:
    """Straight-line base motion with a cosine-ramped trapezoidal profile.

    Cruise speed is base_v_operational, or the peak of a triangular profile
    when the displacement is too short to cruise; heading eases from start
    to goal with a 1-cosine blend.  Samples run at control_tick, always
    ending exactly at the goal with zero velocity.
    """
    dx, dy = goal.x - start.x, goal.y - start.y
    distance = math.hypot(dx, dy)
    if distance < 1e-12:
        raise ValueError("zero-distance base motion request")
    direction = np.array([dx / distance, dy / distance])

    v_cruise = cfg.base_v_operational
    t_ramp = v_cruise / cfg.base_a_peak
    if distance < 2.0 * _cosine_ramp_distance(v_cruise, t_ramp):
        # Triangular profile: two ramps meeting at the reachable peak.
        v_cruise = math.sqrt(distance * cfg.base_a_peak)
        t_ramp = v_cruise / cfg.base_a_peak
        t_total = 2.0 * t_ramp
    else:
        t_total = 2.0 * t_ramp + (distance - v_cruise * t_ramp) / v_cruise

    dtheta = normalize_angle(goal.theta - start.theta)
    tick = cfg.control_tick
    n_ticks = int(math.floor(t_total / tick + 1e-9))
    times = [i * tick for i in range(n_ticks + 1)]
    if t_total - times[-1] > 1e-9:
        times.append(t_total)
    else:
        times[-1] = t_total

    samples = []
    for t in times:
        s = _profile_distance(t, v_cruise, t_ramp, t_total)
        v = _profile_speed(t, v_cruise, t_ramp, t_total)
        frac = t / t_total
        blend = (1.0 - math.cos(math.pi * frac)) / 2.0
        theta = start.theta + dtheta * blend
        omega = dtheta * math.pi / (2.0 * t_total) * math.sin(math.pi * frac)
        pos = np.array([start.x, start.y]) + s * direction
        if t == t_total:
            pos = np.array([goal.x, goal.y])
            theta = goal.theta
        samples.append(
            BaseSample(
                t=t,
                pose=Pose2D(float(pos[0]), float(pos[1]), theta),
                velocity=(float(v * direction[0]), float(v * direction[1]), omega),
            )
        )
    return BaseTrajectory(tuple(samples))


def approach_controller(
    robot: Pose2D,
    object_y: float,
    limits: VelocityScalingLimits,
    arm_offset: float,
    cfg: RobotConfig,
    standoff: float | None = None,
    slowdown_range: float = 0.5,
) -> ApproachCommand:
    """Velocity command while closing in on a tracked object.

    `robot` is the base pose in the approach frame (object ground point at
    the origin, approach axis +x, so robot.x < -standoff while short of the
    stop line); `object_y` is the object's lateral coordinate in the robot
    frame.  Lateral speed follows the scaling law on the manipulator-shifted
    offset with the sign pointing at the object; forward speed tapers
    linearly over the last `slowdown_range` meters before the standoff line.
    """
    if standoff is None:
        standoff = cfg.grasp_standoff
    shifted = object_y - arm_offset
    magnitude = scale_lateral_velocity(abs(shifted), limits)
    v_lateral = math.copysign(magnitude, shifted) if shifted != 0.0 else magnitude
    remaining = -standoff - robot.x
    frac = min(max(remaining / slowdown_range, 0.0), 1.0)
    return ApproachCommand(v_forward=cfg.base_v_operational * frac, v_lateral=v_lateral)


_ARM_SIGN = {"right": 1.0, "left": -1.0}


def shoulder_lateral_offset(arm: str, cfg: RobotConfig) -> float:
    """Signed lateral shoulder coordinate in the base frame."""
    try:
        return _ARM_SIGN[arm] * cfg.shoulder_offset
    except KeyError:
        raise ValueError(f"arm must be 'left' or 'right', got {arm!r}") from None


def arrival_offset_pose(
    object_xy,
    arm: str,
    cfg: RobotConfig,
    approach_theta: float = 0.0,
) -> Pose2D:
    """Base goal placing the chosen arm's shoulder on the object's lateral line.

    In the goal base frame the object sits at (grasp_standoff, shoulder
    offset), i.e. the shoulder-to-object distance equals the standoff and
    shoulder and object are aligned along the approach y-axis.
    """
    ox, oy = float(object_xy[0]), float(object_xy[1])
    s = shoulder_lateral_offset(arm, cfg)
    c, sn = math.cos(approach_theta), math.sin(approach_theta)
    local = np.array([cfg.grasp_standoff, s])
    base_x = ox - (c * local[0] - sn * local[1])
    base_y = oy - (sn * local[0] + c * local[1])
    return Pose2D(base_x, base_y, approach_theta)
