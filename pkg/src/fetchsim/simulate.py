"""Synthetic sensing: depth-cloud generation and localization noise.

Stands in for the RGB-D sensor and the SLAM stack: clouds are sampled from
visible world surfaces with Gaussian perturbation and uniform outliers;
localization estimates are the true pose plus translation noise whose sigma
grows with angular rate in visual mode (matching the motion-blur failure
signature of appearance-based odometry).
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import Pose2D
from .model import CameraModel, NoiseModel, WorldModel
from .perception import PointCloud, _world_to_camera

DEFAULT_CLOUD_DENSITY = 6000.0  # points per square meter of surface
FLOOR_SAMPLING_RANGE = 2.0      # cap on how far floor geometry is sampled
OUTLIER_DEPTH_RANGE = (0.2, 3.0)


def _camera_pose_world(robot: Pose2D, camera: CameraModel) -> tuple[np.ndarray, np.ndarray]:
    """Camera origin and rotation (world <- optical) for a base pose."""
    rot2 = robot.rotation()
    base3 = np.eye(3)
    base3[:2, :2] = rot2
    cam_rot = base3 @ camera.mount_pose.matrix()
    mount = camera.mount_pose.position_array()
    origin = np.array([*(rot2 @ mount[:2] + robot.position()), mount[2]])
    return origin, cam_rot


def _sample_rect(rng, origin, span_u, span_v, density) -> np.ndarray:
    area = np.linalg.norm(span_u) * np.linalg.norm(span_v)
    count = rng.poisson(density * area)
    if count == 0:
        return np.empty((0, 3))
    uv = rng.random((count, 2))
    return origin + uv[:, :1] * span_u + uv[:, 1:] * span_v


def _box_faces(corners: np.ndarray):
    """(origin, span_u, span_v, outward normal) for top + 4 side faces.

    `corners` are 8 points ordered bottom CCW then top CCW.
    """
    b, t = corners[:4], corners[4:]
    faces = [(t[0], t[1] - t[0], t[3] - t[0], None)]  # top
    for i in range(4):
        j = (i + 1) % 4
        faces.append((b[i], b[j] - b[i], t[i] - b[i], None))
    out = []
    center = corners.mean(axis=0)
    for origin, u, v, _ in faces:
        normal = np.cross(u, v)
        norm = np.linalg.norm(normal)
        if norm < 1e-12:
            continue
        normal = normal / norm
        face_center = origin + 0.5 * u + 0.5 * v
        if normal @ (face_center - center) < 0:
            normal = -normal
        out.append((origin, u, v, normal))
    return out


def _furniture_corners(box) -> np.ndarray:
    lo, hi = box.bounds()
    return np.array(
        [
            [hi[0], hi[1], lo[2]], [lo[0], hi[1], lo[2]],
            [lo[0], lo[1], lo[2]], [hi[0], lo[1], lo[2]],
            [hi[0], hi[1], hi[2]], [lo[0], hi[1], hi[2]],
            [lo[0], lo[1], hi[2]], [hi[0], lo[1], hi[2]],
        ]
    )


def _floor_patch(origin: np.ndarray, cam_rot: np.ndarray, camera: CameraModel,
                 world: WorldModel) -> tuple[np.ndarray, np.ndarray] | None:
    """Bounding rectangle (lo, hi) of the visible floor, clipped to the room."""
    hits = []
    for u, v in ((0, 0), (camera.width, 0), (0, camera.height),
                 (camera.width, camera.height), (camera.cx, camera.cy)):
        ray = cam_rot @ camera.pixel_ray(u, v)
        if ray[2] < -1e-6:
            t = -origin[2] / ray[2]
            t = min(t, FLOOR_SAMPLING_RANGE / max(np.linalg.norm(ray), 1e-9))
        else:
            t = FLOOR_SAMPLING_RANGE / max(np.linalg.norm(ray), 1e-9)
        hits.append(origin + t * ray)
    hits = np.vstack(hits)
    lo = np.maximum(hits[:, :2].min(axis=0), [0.0, 0.0])
    hi = np.minimum(hits[:, :2].max(axis=0), list(world.room_extent))
    if (hi - lo <= 1e-6).any():
        return None
    return lo, hi


def synthesize_cloud(
    world: WorldModel,
    robot: Pose2D,
    camera: CameraModel,
    density: float,
    noise: NoiseModel,
    seed: int,
) -> PointCloud:
    """Sample a camera-frame depth cloud of the visible scene.

    Floor, furniture, and object surfaces are sampled at `density` points
    per square meter, back-face and frustum culled, perturbed by
    cloud_sigma, and topped up with outlier_fraction uniform in-frustum
    points.  Deterministic given the seed.
    """
    if density <= 0:
        raise ValueError("density must be positive")
    rng = np.random.default_rng(seed)
    origin, cam_rot = _camera_pose_world(robot, camera)

    chunks = []
    normals = []
    patch = _floor_patch(origin, cam_rot, camera, world)
    if patch is not None:
        lo, hi = patch
        pts = _sample_rect(
            rng,
            np.array([lo[0], lo[1], 0.0]),
            np.array([hi[0] - lo[0], 0.0, 0.0]),
            np.array([0.0, hi[1] - lo[1], 0.0]),
            density,
        )
        chunks.append(pts)
        normals.append(np.tile([0.0, 0.0, 1.0], (len(pts), 1)))
    bodies = [_furniture_corners(b) for b in world.furniture]
    bodies += [obj.box_corners() for obj in world.objects]
    for corners in bodies:
        for face_origin, u, v, normal in _box_faces(corners):
            pts = _sample_rect(rng, face_origin, u, v, density)
            if len(pts):
                chunks.append(pts)
                normals.append(np.tile(normal, (len(pts), 1)))

    if chunks:
        pts_world = np.vstack(chunks)
        nrm = np.vstack(normals)
        facing = ((origin - pts_world) * nrm).sum(axis=1) > 0
        pts_world = pts_world[facing]
        pts_cam = _world_to_camera(pts_world, robot, camera)
        uv, z = camera.project(pts_cam)
        visible = (
            (z > 0)
            & (uv[:, 0] >= 0) & (uv[:, 0] <= camera.width)
            & (uv[:, 1] >= 0) & (uv[:, 1] <= camera.height)
        )
        pts_cam = pts_cam[visible]
    else:
        pts_cam = np.empty((0, 3))

    if noise.cloud_sigma > 0 and len(pts_cam):
        pts_cam = pts_cam + rng.normal(0.0, noise.cloud_sigma, size=pts_cam.shape)

    n_outliers = int(round(noise.outlier_fraction * len(pts_cam)))
    if n_outliers > 0:
        u = rng.uniform(0, camera.width, size=n_outliers)
        v = rng.uniform(0, camera.height, size=n_outliers)
        depth = rng.uniform(*OUTLIER_DEPTH_RANGE, size=n_outliers)
        rays = np.column_stack(
            [(u - camera.cx) / camera.fx, (v - camera.cy) / camera.fy, np.ones(n_outliers)]
        )
        outliers = rays * depth[:, None]
        pts_cam = np.vstack([pts_cam, outliers]) if len(pts_cam) else outliers

    return PointCloud(pts_cam)


def simulate_localization(
    truth: Pose2D,
    angular_rate: float,
    mode: str,
    noise: NoiseModel,
    seed: int,
    sample_index: int = 0,
) -> Pose2D:
    """Localization estimate: truth plus zero-mean Gaussian translation noise.

    In visual mode the sigma grows by loc_rotation_noise_gain per rad/s of
    commanded rotation (motion blur degrades feature tracking); scan mode
    ignores the angular rate.  Deterministic per (seed, sample_index).
    """
    if mode not in ("scan", "visual"):
        raise ValueError("mode must be 'scan' or 'visual'")
    sigma = noise.loc_sigma_translation
    if mode == "visual":
        sigma += noise.loc_rotation_noise_gain * abs(angular_rate)
    if sigma <= 0:
        return truth
    rng = np.random.default_rng([seed, sample_index])
    dx, dy = rng.normal(0.0, sigma, size=2)
    return Pose2D(truth.x + dx, truth.y + dy, truth.theta)
