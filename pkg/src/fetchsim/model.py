"""World, robot, camera, and noise configuration types.

All types here are frozen dataclasses built from plain floats/tuples so that
loaded configurations compare equal after a serialize/parse round trip and
can be shared freely between concurrent tasks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose2D, Pose3D

KMH_3_5 = 0.972  # 3.5 km/h top base speed
KMH_2_5 = 0.694  # 2.5 km/h operational base speed

# 7-DOF chain: 3 shoulder axes, elbow hinge, 3 wrist axes.  Symmetric
# +/-100 deg everywhere except the elbow, which only bends one way.
DEG100 = math.radians(100.0)
DEFAULT_JOINT_LIMITS: tuple[tuple[float, float], ...] = tuple(
    (math.radians(0.0), math.radians(150.0)) if j == 3 else (-DEG100, DEG100)
    for j in range(7)
)
DEFAULT_JOINT_VEL_LIMITS: tuple[float, ...] = (2.0,) * 7


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera: u = fx*x/z + cx, v = fy*y/z + cy in the optical frame."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    mount_pose: Pose3D
    tilt: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width):
            raise ValueError("cx must lie inside the image")
        if not (0 <= self.cy < self.height):
            raise ValueError("cy must lie inside the image")

    def project(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Project (N, 3) optical-frame points; returns (pixels (N, 2), z)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        z = pts[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self.fx * pts[:, 0] / z + self.cx
            v = self.fy * pts[:, 1] / z + self.cy
        return np.column_stack([u, v]), z

    def pixel_ray(self, u: float, v: float) -> np.ndarray:
        """Unit-depth ray direction through a pixel, in the optical frame."""
        return np.array([(u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0])


def default_camera(tilt_deg: float = 30.0, height: float = 1.25) -> CameraModel:
    """640x480 pinhole with a 60 deg horizontal FOV, tilted down at the head."""
    width, height_px = 640, 480
    fx = (width / 2.0) / math.tan(math.radians(30.0))
    tilt = math.radians(tilt_deg)
    # Optical axes in the base frame: z forward/down by `tilt`, x to -y
    # (image right), y completing the right-handed set (image down).
    rot = np.column_stack(
        [
            np.array([0.0, -1.0, 0.0]),
            np.array([-math.sin(tilt), 0.0, -math.cos(tilt)]),
            np.array([math.cos(tilt), 0.0, -math.sin(tilt)]),
        ]
    )
    mount = Pose3D.from_matrix(rot, (0.05, 0.0, height))
    return CameraModel(
        fx=fx, fy=fx, cx=width / 2.0, cy=height_px / 2.0,
        width=width, height=height_px, mount_pose=mount, tilt=tilt,
    )


CAMERA_UP_AXIS = (0.0, -1.0, 0.0)  # "up" in the optical frame (image -v)


@dataclass(frozen=True)
class VelocityScalingLimits:
    """Linear lateral-velocity scaling law: limits and its input window."""

    vy_min: float = 0.0
    vy_max: float = 0.5
    y_min: float = 0.0
    y_max: float = 1.0

    def __post_init__(self):
        if not self.vy_min < self.vy_max:
            raise ValueError("vy_min must be < vy_max")
        if not self.y_min < self.y_max:
            raise ValueError("y_min must be < y_max")


@dataclass(frozen=True)
class RobotConfig:
    """Base, arm, and task-primitive parameters of the platform."""

    base_v_max: float = KMH_3_5
    base_v_operational: float = KMH_2_5
    base_a_peak: float = 0.5
    arm_reach: float = 0.8
    joint_limits: tuple[tuple[float, float], ...] = DEFAULT_JOINT_LIMITS
    joint_vel_limits: tuple[float, ...] = DEFAULT_JOINT_VEL_LIMITS
    control_tick: float = 0.005
    # Arm geometry (upper arm, forearm, wrist-to-tool must sum to arm_reach).
    link_lengths: tuple[float, float, float] = (0.35, 0.30, 0.15)
    shoulder_offset: float = 0.25
    shoulder_height: float = 0.9
    # Carry pose: tool tucked near the chest, verified collision-free
    # against the shipped furniture.
    arm_home: tuple[float, ...] = (-0.35, -1.44, 0.0, 2.56, -0.62, -0.47, 0.33)
    # Approach / grasp parameters.
    approach_limits: VelocityScalingLimits = field(default_factory=VelocityScalingLimits)
    approach_start_distance: float = 2.0
    grasp_standoff: float = 0.55
    pre_grasp_backoff: float = 0.10
    grasp_pitch: float = 0.35
    swivel: float = 0.0
    capsule_radius: float = 0.05
    # Task-primitive timing.
    detection_latency: float = 0.6
    grasp_duration: float = 3.0
    place_duration: float = 3.0
    relocalize_duration: float = 2.0
    relocalize_tolerance: float = 0.15

    def __post_init__(self):
        if not (0 < self.base_v_operational <= self.base_v_max):
            raise ValueError("require 0 < base_v_operational <= base_v_max")
        if self.base_a_peak <= 0:
            raise ValueError("base_a_peak must be positive")
        if self.control_tick <= 0:
            raise ValueError("control_tick must be positive")
        limits = tuple((float(lo), float(hi)) for lo, hi in self.joint_limits)
        if len(limits) != 7:
            raise ValueError("joint_limits must have 7 entries")
        for j, (lo, hi) in enumerate(limits):
            if not lo < hi:
                raise ValueError(f"joint {j + 1} limits must satisfy lower < upper")
        vels = tuple(float(v) for v in self.joint_vel_limits)
        if len(vels) != 7 or any(v <= 0 for v in vels):
            raise ValueError("joint_vel_limits must be 7 positive values")
        lengths = tuple(float(v) for v in self.link_lengths)
        if len(lengths) != 3 or any(v <= 0 for v in lengths):
            raise ValueError("link_lengths must be 3 positive values")
        if abs(sum(lengths) - self.arm_reach) > 1e-9:
            raise ValueError("link_lengths must sum to arm_reach")
        home = tuple(float(v) for v in self.arm_home)
        if len(home) != 7:
            raise ValueError("arm_home must have 7 entries")
        object.__setattr__(self, "joint_limits", limits)
        object.__setattr__(self, "joint_vel_limits", vels)
        object.__setattr__(self, "link_lengths", lengths)
        object.__setattr__(self, "arm_home", home)


@dataclass(frozen=True)
class FurnitureBox:
    """Axis-aligned collision box; z spans [0, height]."""

    name: str
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    height: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"furniture '{self.name}' has inverted extents")
        if self.height <= 0:
            raise ValueError(f"furniture '{self.name}' must have positive height")

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([self.x_min, self.y_min, 0.0])
        hi = np.array([self.x_max, self.y_max, self.height])
        return lo, hi


@dataclass(frozen=True)
class WorldObject:
    """Catalog object; pose locates the bottom-face center."""

    label: str
    pose: Pose3D
    height: float
    footprint: tuple[float, float]

    def __post_init__(self):
        fp = tuple(float(v) for v in self.footprint)
        if len(fp) != 2 or any(v <= 0 for v in fp):
            raise ValueError(f"object '{self.label}' footprint must be 2 positive values")
        object.__setattr__(self, "footprint", fp)

    def center(self) -> np.ndarray:
        c = self.pose.position_array()
        c[2] += self.height / 2.0
        return c

    def box_corners(self) -> np.ndarray:
        """8 world-frame corners, bottom face CCW then top face CCW."""
        hw, hd = self.footprint[0] / 2.0, self.footprint[1] / 2.0
        local = np.array(
            [
                [hw, hd, 0.0], [-hw, hd, 0.0], [-hw, -hd, 0.0], [hw, -hd, 0.0],
                [hw, hd, self.height], [-hw, hd, self.height],
                [-hw, -hd, self.height], [hw, -hd, self.height],
            ]
        )
        return self.pose.transform_points(local)


@dataclass(frozen=True)
class WorldModel:
    """Static room: extent, furniture boxes, object catalog, robot start."""

    room_extent: tuple[float, float] = (10.0, 8.0)
    furniture: tuple[FurnitureBox, ...] = ()
    objects: tuple[WorldObject, ...] = ()
    robot_start: Pose2D = field(default_factory=lambda: Pose2D(1.0, 1.0, 0.0))

    def __post_init__(self):
        object.__setattr__(self, "furniture", tuple(self.furniture))
        object.__setattr__(self, "objects", tuple(self.objects))

    def find_object(self, label: str) -> WorldObject:
        for obj in self.objects:
            if obj.label == label:
                return obj
        raise KeyError(f"no object labeled '{label}' in the world catalog")


@dataclass(frozen=True)
class NoiseModel:
    """Seeds and magnitudes for sensor, detector, and localization noise."""

    cloud_sigma: float = 0.002
    outlier_fraction: float = 0.02
    detection_pixel_sigma: float = 2.0
    detection_miss_prob: float = 0.02
    loc_sigma_translation: float = 0.048
    loc_rotation_noise_gain: float = 0.05
    master_seed: int = 0
    localization_mode: str = "scan"

    def __post_init__(self):
        for name in ("cloud_sigma", "detection_pixel_sigma",
                     "loc_sigma_translation", "loc_rotation_noise_gain"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("outlier_fraction", "detection_miss_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.localization_mode not in ("scan", "visual"):
            raise ValueError("localization_mode must be 'scan' or 'visual'")

    def zeroed(self) -> "NoiseModel":
        """Copy of this model with every perturbation switched off."""
        return NoiseModel(
            cloud_sigma=0.0, outlier_fraction=0.0, detection_pixel_sigma=0.0,
            detection_miss_prob=0.0, loc_sigma_translation=0.0,
            loc_rotation_noise_gain=0.0, master_seed=self.master_seed,
            localization_mode=self.localization_mode,
        )


def validate_world(world: WorldModel) -> list[str]:
    """Check WorldModel invariants; returns one message per violation."""
    violations: list[str] = []
    width, depth = world.room_extent
    if width <= 0 or depth <= 0:
        violations.append(f"room extent ({width}, {depth}) must be positive")
        return violations
    for box in world.furniture:
        if box.x_min < 0 or box.x_max > width or box.y_min < 0 or box.y_max > depth:
            violations.append(f"furniture '{box.name}' extends outside the room")
    for obj in world.objects:
        x, y, _ = obj.pose.position
        if not (0 <= x <= width and 0 <= y <= depth):
            violations.append(f"object '{obj.label}' lies outside the room")
        if obj.height <= 0:
            violations.append(f"object '{obj.label}' must have positive height")
    sx, sy = world.robot_start.x, world.robot_start.y
    if not (0 <= sx <= width and 0 <= sy <= depth):
        violations.append("robot start pose lies outside the room")
    return violations
