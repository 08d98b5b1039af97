"""Geometric 3D object detection from point clouds.

The pipeline mirrors a region-wise amodal box-fitting stack: range filter,
RANSAC support-plane removal, RoI gating, euclidean clustering, projection
onto the support plane, minimum-area rectangle fit, and extrusion by the
object's known height.  Everything is a pure function of its inputs and an
explicit seed, so results are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .geometry import Pose2D
from .model import CAMERA_UP_AXIS, CameraModel, NoiseModel, WorldModel


class DegenerateCloudError(ValueError):
    """Too few points, or points without enough geometric spread."""


class NoClusterError(RuntimeError):
    """Clustering produced no cluster of the required minimum size."""


@dataclass(frozen=True)
class PerceptionParams:
    """Tuning constants of the detection pipeline."""

    max_range: float = 1.5
    ransac_iters: int = 200
    ransac_inlier_tol: float = 0.008
    cluster_tol: float = 0.02
    cluster_min_size: int = 30

    def __post_init__(self):
        for name in ("max_range", "ransac_iters", "ransac_inlier_tol",
                     "cluster_tol", "cluster_min_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class PointCloud:
    """Immutable (N, 3) float array of points; rejects non-finite values."""

    __slots__ = ("points",)

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError("point cloud must have shape (N, 3)")
        if not np.isfinite(pts).all():
            raise ValueError("point cloud contains non-finite coordinates")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __setattr__(self, name, value):
        raise AttributeError("PointCloud is immutable")

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, PointCloud) and np.array_equal(self.points, other.points)

    def __repr__(self) -> str:
        return f"PointCloud({len(self)} points)"


@dataclass(frozen=True)
class Roi2D:
    """Detector region of interest in pixel coordinates."""

    x: float
    y: float
    w: float
    h: float
    label: str = ""
    confidence: float = 1.0

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError("RoI width and height must be positive")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")

    def contains(self, uv: np.ndarray) -> np.ndarray:
        u, v = uv[:, 0], uv[:, 1]
        return (u >= self.x) & (u <= self.x + self.w) & (v >= self.y) & (v <= self.y + self.h)

    def intersects_image(self, camera: CameraModel) -> bool:
        return (self.x < camera.width and self.x + self.w > 0
                and self.y < camera.height and self.y + self.h > 0)


@dataclass(frozen=True)
class Plane:
    """Plane n . p = d with a unit normal."""

    normal: tuple[float, float, float]
    d: float

    def __post_init__(self):
        n = tuple(float(v) for v in self.normal)
        norm = math.sqrt(sum(v * v for v in n))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError("plane normal must be unit length within 1e-9")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "d", float(self.d))

    def normal_array(self) -> np.ndarray:
        return np.array(self.normal)

    def distances(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.normal_array() - self.d


@dataclass(frozen=True)
class Rect2D:
    """Oriented rectangle in in-plane coordinates; angle wrapped to (-pi/2, pi/2]."""

    center: tuple[float, float]
    half_extents: tuple[float, float]
    angle: float

    def __post_init__(self):
        if self.half_extents[0] <= 0 or self.half_extents[1] <= 0:
            raise ValueError("half extents must be positive")
        if not (-math.pi / 2 < self.angle <= math.pi / 2):
            raise ValueError("angle must lie in (-pi/2, pi/2]")
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "half_extents", tuple(float(v) for v in self.half_extents))

    @property
    def area(self) -> float:
        return 4.0 * self.half_extents[0] * self.half_extents[1]

    def corners(self) -> np.ndarray:
        """4 corners, counterclockwise starting at (+a, +b)."""
        a, b = self.half_extents
        c, s = math.cos(self.angle), math.sin(self.angle)
        rot = np.array([[c, -s], [s, c]])
        local = np.array([[a, b], [-a, b], [-a, -b], [a, -b]])
        return local @ rot.T + np.array(self.center)


class Box3D:
    """Amodal oriented box: 8 corners (bottom CCW then top CCW) plus center."""

    __slots__ = ("corners", "center", "label")

    def __init__(self, corners, label: str = ""):
        pts = np.asarray(corners, dtype=float)
        if pts.shape != (8, 3):
            raise ValueError("a box needs exactly 8 corners")
        center = pts.mean(axis=0)
        # Opposite-face edge vectors must match for a rectangular parallelepiped.
        bottom, top = pts[:4], pts[4:]
        for face in (bottom, top):
            for i in range(4):
                e1 = face[(i + 1) % 4] - face[i]
                e2 = face[(i + 3) % 4] - face[(i + 2) % 4]
                if np.abs(e1 + e2).max() > 1e-6:
                    raise ValueError("corners do not form a rectangular parallelepiped")
        verticals = top - bottom
        if np.abs(verticals - verticals[0]).max() > 1e-6:
            raise ValueError("top face is not a translate of the bottom face")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "corners", pts)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "label", label)

    def __setattr__(self, name, value):
        raise AttributeError("Box3D is immutable")

    def __eq__(self, other) -> bool:
        return (isinstance(other, Box3D) and self.label == other.label
                and np.array_equal(self.corners, other.corners))

    def __repr__(self) -> str:
        c = self.center
        return f"Box3D(label={self.label!r}, center=({c[0]:.3f}, {c[1]:.3f}, {c[2]:.3f}))"


def filter_range(cloud: PointCloud, max_range: float) -> PointCloud:
    """Keep points with Euclidean norm <= max_range, preserving order."""
    if max_range <= 0:
        raise ValueError("max_range must be positive")
    if len(cloud) == 0:
        return cloud
    keep = np.linalg.norm(cloud.points, axis=1) <= max_range
    return PointCloud(cloud.points[keep])


def segment_floor_plane(
    cloud: PointCloud,
    params: PerceptionParams,
    seed: int,
    up_hint=(0.0, 0.0, 1.0),
) -> tuple[Plane, PointCloud, PointCloud]:
    """RANSAC-segment the largest plane; returns (plane, inliers, remainder).

    The consensus plane over `ransac_iters` seeded 3-point hypotheses is
    refit to its inliers by least squares, then the cloud is partitioned by
    the refit plane.  The normal is oriented toward `up_hint` (pass the
    camera up axis for optical-frame clouds).
    """
    pts = cloud.points
    n = len(pts)
    if n < 3:
        raise DegenerateCloudError("plane segmentation needs at least 3 points")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(params.ransac_iters, 3))
    a, b, c = pts[idx[:, 0]], pts[idx[:, 1]], pts[idx[:, 2]]
    normals = np.cross(b - a, c - a)
    lengths = np.linalg.norm(normals, axis=1)
    valid = lengths > 1e-12
    if not valid.any():
        raise DegenerateCloudError("all RANSAC samples were collinear")
    normals[valid] /= lengths[valid, None]
    offsets = np.einsum("ij,ij->i", normals, a)
    dist = np.abs(pts @ normals.T - offsets)  # (n, iters)
    counts = np.where(valid, (dist <= params.ransac_inlier_tol).sum(axis=0), -1)
    best = int(np.argmax(counts))
    if counts[best] < 3:
        raise DegenerateCloudError("no plane hypothesis gathered 3 inliers")

    inlier_mask = dist[:, best] <= params.ransac_inlier_tol
    normal, offset = _refit_plane(pts[inlier_mask])
    up = np.asarray(up_hint, dtype=float)
    if normal @ up < 0:
        normal, offset = -normal, -offset
    plane = Plane(tuple(normal), offset)
    final_mask = np.abs(plane.distances(pts)) <= params.ransac_inlier_tol
    return plane, PointCloud(pts[final_mask]), PointCloud(pts[~final_mask])


def _refit_plane(pts: np.ndarray) -> tuple[np.ndarray, float]:
    """Least-squares plane through points: smallest principal direction."""
    centroid = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - centroid, full_matrices=False)
    normal = vt[-1]
    normal = normal / np.linalg.norm(normal)
    return normal, float(normal @ centroid)


def extract_roi_points(cloud: PointCloud, roi: Roi2D, camera: CameraModel) -> PointCloud:
    """Keep points with positive depth whose projection falls inside the RoI."""
    if len(cloud) == 0:
        return cloud
    uv, z = camera.project(cloud.points)
    keep = (z > 0) & roi.contains(uv)
    return PointCloud(cloud.points[keep])


def euclidean_cluster(cloud: PointCloud, tol: float, min_size: int) -> list[PointCloud]:
    """Connected components under inter-point distance <= tol.

    Clusters below min_size are dropped; output is sorted by descending
    size, ties broken by first point index.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    pts = cloud.points
    n = len(pts)
    if n == 0:
        return []
    tree = cKDTree(pts)
    visited = np.zeros(n, dtype=bool)
    clusters: list[list[int]] = []
    for start in range(n):
        if visited[start]:
            continue
        queue = [start]
        visited[start] = True
        members = []
        while queue:
            i = queue.pop()
            members.append(i)
            for j in tree.query_ball_point(pts[i], tol):
                if not visited[j]:
                    visited[j] = True
                    queue.append(j)
        if len(members) >= min_size:
            members.sort()
            clusters.append(members)
    clusters.sort(key=lambda m: (-len(m), m[0]))
    return [PointCloud(pts[m]) for m in clusters]


def plane_basis(plane: Plane) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Deterministic right-handed in-plane basis (e1, e2, origin).

    e1 is built from the coordinate axis least aligned with the normal, so
    the basis depends only on the plane itself.
    """
    n = plane.normal_array()
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(n)))] = 1.0
    e1 = axis - (axis @ n) * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    origin = plane.d * n
    return e1, e2, origin


def project_to_plane(points: PointCloud, plane: Plane) -> np.ndarray:
    """Orthogonal projection onto the plane, in plane_basis coordinates."""
    e1, e2, origin = plane_basis(plane)
    rel = points.points - origin
    return np.column_stack([rel @ e1, rel @ e2])


def _canonical_rect(angle: float, extents: tuple[float, float]) -> tuple[float, tuple[float, float]]:
    """Unique rectangle representation: angle in (-pi/2, pi/2], long axis first.

    A rectangle admits two in-range (angle, extents) forms a quarter turn
    apart; prefer the one with extents[0] >= extents[1], then the smaller
    angle (squares).
    """
    angle = math.fmod(angle, math.pi)
    if angle > math.pi / 2:
        angle -= math.pi
    elif angle <= -math.pi / 2:
        angle += math.pi
    alt = angle - math.pi / 2 if angle > 0 else angle + math.pi / 2
    reps = [(angle, extents), (alt, (extents[1], extents[0]))]
    reps = [r for r in reps if r[1][0] >= r[1][1]] or reps
    reps.sort(key=lambda r: r[0])
    return reps[0]


def fit_min_area_rect(points2d: np.ndarray) -> Rect2D:
    """Minimum-area enclosing rectangle of 2D points.

    Scans rectangles aligned with each convex-hull edge (one of which
    attains the global optimum); ties prefer the representation with the
    long axis first, then the smallest angle.
    """
    pts = np.atleast_2d(np.asarray(points2d, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("expected (N, 2) points")
    if len(pts) < 3:
        raise DegenerateCloudError("rectangle fit needs at least 3 points")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateCloudError(f"degenerate 2D input: {exc}") from exc
    hull_pts = pts[hull.vertices]
    edges = np.roll(hull_pts, -1, axis=0) - hull_pts

    best = None  # (area, angle, center, extents)
    for edge in edges:
        length = math.hypot(edge[0], edge[1])
        if length < 1e-12:
            continue
        theta = math.atan2(edge[1], edge[0])
        c, s = math.cos(-theta), math.sin(-theta)
        rot = np.array([[c, -s], [s, c]])
        local = hull_pts @ rot.T
        lo, hi = local.min(axis=0), local.max(axis=0)
        extents = ((hi[0] - lo[0]) / 2.0, (hi[1] - lo[1]) / 2.0)
        area = 4.0 * extents[0] * extents[1]
        angle, extents = _canonical_rect(theta, extents)
        center_local = (lo + hi) / 2.0
        center = rot.T @ center_local
        if best is None or (area, angle) < (best[0], best[1]):
            best = (area, angle, center, extents)
    if best is None:
        raise DegenerateCloudError("all candidate edges were degenerate")
    _, angle, center, extents = best
    if extents[0] <= 0 or extents[1] <= 0:
        raise DegenerateCloudError("points are collinear")
    return Rect2D(center=tuple(center), half_extents=extents, angle=angle)


def extrude_box(rect: Rect2D, plane: Plane, height: float, label: str = "") -> Box3D:
    """Lift a fitted rectangle off its plane into an amodal 3D box.

    The bottom face is the rectangle embedded in the plane (via
    plane_basis), the top face sits `height` along the plane normal;
    corners are ordered bottom CCW then top CCW.
    """
    if height <= 0:
        raise ValueError("height must be positive")
    e1, e2, origin = plane_basis(plane)
    n = plane.normal_array()
    bottom2d = rect.corners()
    bottom = origin + bottom2d[:, 0, None] * e1 + bottom2d[:, 1, None] * e2
    top = bottom + height * n
    return Box3D(np.vstack([bottom, top]), label=label)


def detect_objects_2d_sim(
    world: WorldModel,
    robot: Pose2D,
    camera: CameraModel,
    noise: NoiseModel,
    seed: int,
) -> list[Roi2D]:
    """Simulated 2D detector: projected object bounds plus pixel jitter.

    Stands in for the neural RoI proposer: every catalog object whose box
    projects into the image (all corners in front of the camera) yields one
    RoI, perturbed by detection_pixel_sigma and dropped with
    detection_miss_prob.  Deterministic given the seed.
    """
    rng = np.random.default_rng(seed)
    rois: list[Roi2D] = []
    for obj in world.objects:
        # Draw per object regardless of visibility so that one object's
        # visibility cannot shift another's noise stream.
        jitter = rng.normal(0.0, noise.detection_pixel_sigma, size=4)
        missed = rng.random() < noise.detection_miss_prob
        corners_world = obj.box_corners()
        corners_cam = _world_to_camera(corners_world, robot, camera)
        if (corners_cam[:, 2] <= 0).any():
            continue
        uv, _ = camera.project(corners_cam)
        lo = uv.min(axis=0)
        hi = uv.max(axis=0)
        lo_u = max(lo[0], 0.0)
        lo_v = max(lo[1], 0.0)
        hi_u = min(hi[0], float(camera.width))
        hi_v = min(hi[1], float(camera.height))
        if lo_u >= hi_u or lo_v >= hi_v:
            continue
        if missed:
            continue
        x = lo_u + jitter[0]
        y = lo_v + jitter[1]
        w = max(hi_u - lo_u + jitter[2], 1.0)
        h = max(hi_v - lo_v + jitter[3], 1.0)
        roi = Roi2D(x=x, y=y, w=w, h=h, label=obj.label, confidence=1.0)
        if roi.intersects_image(camera):
            rois.append(roi)
    return rois


def _world_to_camera(points: np.ndarray, robot: Pose2D, camera: CameraModel) -> np.ndarray:
    """World points -> camera optical frame for a robot at a planar pose."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rot2 = robot.rotation()
    base = pts.copy()
    base[:, :2] = (pts[:, :2] - robot.position()) @ rot2
    return camera.mount_pose.inverse_transform_points(base)


def camera_to_base(points: np.ndarray, camera: CameraModel) -> np.ndarray:
    """Camera optical-frame points -> robot base frame."""
    return camera.mount_pose.transform_points(points)


def estimate_box(
    cloud: PointCloud,
    roi: Roi2D,
    camera: CameraModel,
    known_height: float,
    params: PerceptionParams,
    seed: int,
) -> Box3D:
    """Full region-wise amodal box fit on a camera-frame cloud.

    Composition: range filter, support-plane RANSAC removal, RoI gating,
    euclidean clustering (largest cluster), projection to the support
    plane, min-area rectangle fit, extrusion by the known height.
    """
    cloud = filter_range(cloud, params.max_range)
    plane, _, remainder = segment_floor_plane(cloud, params, seed, up_hint=CAMERA_UP_AXIS)
    region = extract_roi_points(remainder, roi, camera)
    clusters = euclidean_cluster(region, params.cluster_tol, params.cluster_min_size)
    if not clusters:
        raise NoClusterError(
            f"no cluster of >= {params.cluster_min_size} points inside the RoI"
        )
    footprint = project_to_plane(clusters[0], plane)
    rect = fit_min_area_rect(footprint)
    return extrude_box(rect, plane, known_height, label=roi.label)
