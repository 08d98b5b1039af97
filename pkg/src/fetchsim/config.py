"""Configuration loading, validation, and serialization.

The configuration file is a single YAML document with three top-level
sections (``world``, ``robot``, ``noise``); every field is optional and
falls back to the documented default.  See README for the full schema.
"""

from __future__ import annotations

import hashlib
from importlib import resources
from pathlib import Path

import yaml

from .geometry import Pose2D, Pose3D
from .model import (
    CameraModel,
    FurnitureBox,
    NoiseModel,
    RobotConfig,
    VelocityScalingLimits,
    WorldModel,
    WorldObject,
    default_camera,
    validate_world,
)


class ConfigError(ValueError):
    """Malformed configuration file (parse failure or bad field)."""


class ConfigValidationError(ConfigError):
    """Structurally valid configuration that violates an invariant."""


def default_config_path() -> Path:
    """Path of the default configuration shipped with the package."""
    return Path(str(resources.files("fetchsim").joinpath("data/default.yaml")))


def _pose2d_from(value) -> Pose2D:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(f"expected [x, y, theta], got {value!r}")
    return Pose2D(*(float(v) for v in value))


def _pose3d_from(value) -> Pose3D:
    if isinstance(value, dict):
        pos = value.get("position", (0.0, 0.0, 0.0))
        quat = value.get("orientation", (1.0, 0.0, 0.0, 0.0))
        return Pose3D(tuple(float(v) for v in pos), tuple(float(v) for v in quat))
    if isinstance(value, (list, tuple)) and len(value) == 3:
        return Pose3D(tuple(float(v) for v in value))
    raise ConfigError(f"expected [x, y, z] or position/orientation mapping, got {value!r}")


def _world_from(section: dict) -> WorldModel:
    furniture = []
    for entry in section.get("furniture", []):
        furniture.append(
            FurnitureBox(
                name=str(entry["name"]),
                x_min=float(entry["x_min"]),
                x_max=float(entry["x_max"]),
                y_min=float(entry["y_min"]),
                y_max=float(entry["y_max"]),
                height=float(entry["height"]),
            )
        )
    objects = []
    for entry in section.get("objects", []):
        objects.append(
            WorldObject(
                label=str(entry["label"]),
                pose=_pose3d_from(entry["pose"]),
                height=float(entry["height"]),
                footprint=tuple(float(v) for v in entry["footprint"]),
            )
        )
    kwargs = {}
    if "room_extent" in section:
        kwargs["room_extent"] = tuple(float(v) for v in section["room_extent"])
    if "robot_start" in section:
        kwargs["robot_start"] = _pose2d_from(section["robot_start"])
    return WorldModel(furniture=tuple(furniture), objects=tuple(objects), **kwargs)


_ROBOT_SCALARS = (
    "base_v_max", "base_v_operational", "base_a_peak", "arm_reach",
    "control_tick", "shoulder_offset", "shoulder_height",
    "approach_start_distance", "grasp_standoff", "pre_grasp_backoff",
    "grasp_pitch", "swivel", "capsule_radius", "detection_latency", "grasp_duration",
    "place_duration", "relocalize_duration", "relocalize_tolerance",
)

_NOISE_FIELDS = (
    "cloud_sigma", "outlier_fraction", "detection_pixel_sigma",
    "detection_miss_prob", "loc_sigma_translation",
    "loc_rotation_noise_gain",
)


def _robot_from(section: dict) -> RobotConfig:
    kwargs = {}
    for name in _ROBOT_SCALARS:
        if name in section:
            kwargs[name] = float(section[name])
    if "joint_limits" in section:
        kwargs["joint_limits"] = tuple(
            (float(lo), float(hi)) for lo, hi in section["joint_limits"]
        )
    if "joint_vel_limits" in section:
        kwargs["joint_vel_limits"] = tuple(float(v) for v in section["joint_vel_limits"])
    if "link_lengths" in section:
        kwargs["link_lengths"] = tuple(float(v) for v in section["link_lengths"])
    if "arm_home" in section:
        kwargs["arm_home"] = tuple(float(v) for v in section["arm_home"])
    if "approach_limits" in section:
        lim = section["approach_limits"]
        kwargs["approach_limits"] = VelocityScalingLimits(
            vy_min=float(lim.get("vy_min", 0.0)),
            vy_max=float(lim.get("vy_max", 0.5)),
            y_min=float(lim.get("y_min", 0.0)),
            y_max=float(lim.get("y_max", 1.0)),
        )
    return RobotConfig(**kwargs)


def _noise_from(section: dict) -> NoiseModel:
    kwargs = {}
    for name in _NOISE_FIELDS:
        if name in section:
            kwargs[name] = float(section[name])
    if "master_seed" in section:
        kwargs["master_seed"] = int(section["master_seed"])
    if "localization_mode" in section:
        kwargs["localization_mode"] = str(section["localization_mode"])
    return NoiseModel(**kwargs)


def load_config(path) -> tuple[WorldModel, RobotConfig, NoiseModel]:
    """Load and fully validate a configuration file.

    Raises ConfigError on parse failures and ConfigValidationError when a
    named invariant is violated.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("top level of the config must be a mapping")
    unknown = set(doc) - {"world", "robot", "noise"}
    if unknown:
        raise ConfigError(f"unknown top-level sections: {sorted(unknown)}")
    try:
        world = _world_from(doc.get("world", {}) or {})
        robot = _robot_from(doc.get("robot", {}) or {})
        noise = _noise_from(doc.get("noise", {}) or {})
    except ConfigError:
        raise
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad config structure: {exc}") from exc
    except ValueError as exc:
        raise ConfigValidationError(str(exc)) from exc
    violations = validate_world(world)
    if violations:
        raise ConfigValidationError("; ".join(violations))
    return world, robot, noise


def config_to_dict(world: WorldModel, robot: RobotConfig, noise: NoiseModel) -> dict:
    world_doc = {
        "room_extent": list(world.room_extent),
        "robot_start": [world.robot_start.x, world.robot_start.y, world.robot_start.theta],
        "furniture": [
            {
                "name": b.name, "x_min": b.x_min, "x_max": b.x_max,
                "y_min": b.y_min, "y_max": b.y_max, "height": b.height,
            }
            for b in world.furniture
        ],
        "objects": [
            {
                "label": o.label,
                "pose": {
                    "position": list(o.pose.position),
                    "orientation": list(o.pose.orientation),
                },
                "height": o.height,
                "footprint": list(o.footprint),
            }
            for o in world.objects
        ],
    }
    robot_doc = {name: getattr(robot, name) for name in _ROBOT_SCALARS}
    robot_doc["joint_limits"] = [list(pair) for pair in robot.joint_limits]
    robot_doc["joint_vel_limits"] = list(robot.joint_vel_limits)
    robot_doc["link_lengths"] = list(robot.link_lengths)
    robot_doc["arm_home"] = list(robot.arm_home)
    robot_doc["approach_limits"] = {
        "vy_min": robot.approach_limits.vy_min,
        "vy_max": robot.approach_limits.vy_max,
        "y_min": robot.approach_limits.y_min,
        "y_max": robot.approach_limits.y_max,
    }
    noise_doc = {name: getattr(noise, name) for name in _NOISE_FIELDS}
    noise_doc["master_seed"] = noise.master_seed
    noise_doc["localization_mode"] = noise.localization_mode
    return {"world": world_doc, "robot": robot_doc, "noise": noise_doc}


def save_config(world: WorldModel, robot: RobotConfig, noise: NoiseModel, path) -> None:
    """Write a configuration that load_config parses back to equal values."""
    doc = config_to_dict(world, robot, noise)
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=True))


def config_fingerprint(world: WorldModel, robot: RobotConfig, noise: NoiseModel) -> str:
    """Stable hash of the effective configuration (comment-insensitive)."""
    canonical = yaml.safe_dump(config_to_dict(world, robot, noise), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def load_default_config() -> tuple[WorldModel, RobotConfig, NoiseModel]:
    return load_config(default_config_path())


def load_camera(path=None) -> CameraModel:
    """Load a camera description; with no path, the default head camera.

    Camera YAML fields (all optional): fx, fy, cx, cy, width, height,
    tilt_deg, mount_height.
    """
    if path is None:
        return default_camera()
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read camera file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    doc = doc or {}
    base = default_camera(
        tilt_deg=float(doc.get("tilt_deg", 30.0)),
        height=float(doc.get("mount_height", 1.25)),
    )
    try:
        return CameraModel(
            fx=float(doc.get("fx", base.fx)),
            fy=float(doc.get("fy", base.fy)),
            cx=float(doc.get("cx", base.cx)),
            cy=float(doc.get("cy", base.cy)),
            width=int(doc.get("width", base.width)),
            height=int(doc.get("height", base.height)),
            mount_pose=base.mount_pose,
            tilt=base.tilt,
        )
    except ValueError as exc:
        raise ConfigValidationError(str(exc)) from exc
