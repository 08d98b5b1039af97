"""Shared fixtures and synthetic-scene builders for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from fetchsim.config import load_default_config
from fetchsim.geometry import Pose2D
from fetchsim.model import default_camera
from fetchsim.perception import PointCloud, Roi2D, _world_to_camera


@pytest.fixture(scope="session")
def default_config():
    return load_default_config()


@pytest.fixture(scope="session")
def camera():
    return default_camera()


def box_face_points(origin, u, v, n_inner, rng, n_edge=24):
    """Face samples: uniform interior plus edge-uniform silhouette points."""
    uv = rng.random((n_inner, 2))
    origin, u, v = np.asarray(origin, float), np.asarray(u, float), np.asarray(v, float)
    pts = [origin + uv[:, :1] * u + uv[:, 1:] * v]
    ts = np.linspace(0.0, 1.0, n_edge)
    for a, b in (((0, 0), (1, 0)), ((1, 0), (1, 1)), ((1, 1), (0, 1)), ((0, 1), (0, 0))):
        s = np.array(a) + ts[:, None] * (np.array(b) - np.array(a))
        pts.append(origin + s[:, :1] * u + s[:, 1:] * v)
    return np.vstack(pts)


def sample_box_object(w, d, h, yaw, pos, rng, n_per_face=220):
    """Surface samples + outward normals of an upright box at `pos` (bottom center)."""
    faces = []
    for (o, u, v, n) in (
        ((-w / 2, -d / 2, h), (w, 0, 0), (0, d, 0), (0, 0, 1)),
        ((-w / 2, -d / 2, 0), (w, 0, 0), (0, 0, h), (0, -1, 0)),
        ((-w / 2, d / 2, 0), (w, 0, 0), (0, 0, h), (0, 1, 0)),
        ((-w / 2, -d / 2, 0), (0, d, 0), (0, 0, h), (-1, 0, 0)),
        ((w / 2, -d / 2, 0), (0, d, 0), (0, 0, h), (1, 0, 0)),
    ):
        p = box_face_points(o, u, v, n_per_face, rng)
        faces.append((p, np.tile(n, (len(p), 1))))
    pts = np.vstack([f[0] for f in faces])
    normals = np.vstack([f[1] for f in faces])
    c, s = math.cos(yaw), math.sin(yaw)
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    return pts @ rot.T + np.asarray(pos, float), normals @ rot.T


def sample_can_object(r, h, pos, rng, n_side=600, n_top=200, n_rim=150):
    """Surface samples + outward normals of a cylinder at `pos` (bottom center)."""
    pos = np.asarray(pos, float)
    ang = rng.uniform(0, 2 * np.pi, n_side)
    z = rng.uniform(0, h, n_side)
    side = np.column_stack([r * np.cos(ang), r * np.sin(ang), z]) + pos
    nrm_side = np.column_stack([np.cos(ang), np.sin(ang), np.zeros(n_side)])
    rad = r * np.sqrt(rng.uniform(0, 1, n_top))
    a2 = rng.uniform(0, 2 * np.pi, n_top)
    top = np.column_stack([rad * np.cos(a2), rad * np.sin(a2), np.full(n_top, h)]) + pos
    rim_a = np.linspace(0, 2 * np.pi, n_rim, endpoint=False)
    rim = np.column_stack([r * np.cos(rim_a), r * np.sin(rim_a), np.full(n_rim, h)]) + pos
    pts = np.vstack([side, top, rim])
    normals = np.vstack([nrm_side, np.tile([0, 0, 1], (n_top + n_rim, 1))])
    return pts, normals


def render_tabletop_scene(obj_points, obj_normals, true_center, rng, sigma,
                          table_height=0.75, cam=None, roi_pad=2.0):
    """Camera-frame cloud + exact RoI for an object on a horizontal surface.

    Places the default head camera at the origin pose, culls back-facing
    object samples, and returns (cloud, roi, true_center_cam).
    """
    cam = cam or default_camera()
    robot = Pose2D(0.0, 0.0, 0.0)
    cx, cy = true_center[0], true_center[1]
    n_plane = 1200
    px = rng.uniform(cx - 0.25, cx + 0.25, n_plane)
    py = rng.uniform(cy - 0.3, cy + 0.3, n_plane)
    plane_pts = np.column_stack([px, py, np.full(n_plane, table_height)])

    cam_origin = np.array([*cam.mount_pose.position[:2], cam.mount_pose.position[2]])
    facing = ((cam_origin - obj_points) * obj_normals).sum(axis=1) >= 0
    obj_pts = obj_points[facing]

    cam_pts = _world_to_camera(np.vstack([plane_pts, obj_pts]), robot, cam)
    obj_cam = _world_to_camera(obj_pts, robot, cam)
    uv, _ = cam.project(obj_cam)
    lo, hi = uv.min(axis=0), uv.max(axis=0)
    roi = Roi2D(
        x=lo[0] - roi_pad, y=lo[1] - roi_pad,
        w=hi[0] - lo[0] + 2 * roi_pad, h=hi[1] - lo[1] + 2 * roi_pad,
        label="obj",
    )
    if sigma > 0:
        cam_pts = cam_pts + rng.normal(0, sigma, cam_pts.shape)
    true_cam = _world_to_camera(np.asarray(true_center, float)[None, :], robot, cam)[0]
    return PointCloud(cam_pts), roi, true_cam


def tabletop_cases(sigma, seed=77):
    """30 (cloud, roi, true_center_cam, height) cases: 3 object types x 10 poses."""
    rng = np.random.default_rng(seed)
    cases = []
    table_h = 0.75
    for ki in range(3):
        for p in range(10):
            pos = (0.45 + 0.03 * p, -0.2 + 0.045 * p, table_h)
            yaw = 0.3 * p
            if ki == 0:
                pts, nrm = sample_can_object(0.03, 0.12, pos, rng)
                height = 0.12
            elif ki == 1:
                pts, nrm = sample_box_object(0.07, 0.05, 0.16, yaw, pos, rng)
                height = 0.16
            else:
                pts, nrm = sample_box_object(0.14, 0.09, 0.20, yaw, pos, rng)
                height = 0.20
            true_center = (pos[0], pos[1], table_h + height / 2)
            cloud, roi, true_cam = render_tabletop_scene(pts, nrm, true_center, rng, sigma)
            cases.append((cloud, roi, true_cam, height))
    return cases
