"""Shared geometric primitives: planar poses, spatial poses, rotations.

Frame conventions used throughout the package:

* World and robot base frames are right-handed with z up.  A base frame has
  x pointing forward and theta measured counterclockwise from world +x.
* Camera frames follow the pinhole convention: +z along the optical axis,
  +x toward image u (right), +y toward image v (down).
* Arm side labels: the "right" arm shoulder sits at +y of the base frame,
  the "left" at -y, matching the arrival-offset contract used by the base
  planner (goal.y = object.y - offset for the right arm).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.fmod(theta, TWO_PI)
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    elif wrapped > math.pi:
        wrapped -= TWO_PI
    return wrapped


@dataclass(frozen=True)
class Pose2D:
    """Planar pose in meters/radians; theta is stored wrapped to (-pi, pi]."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))

    def position(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s], [s, c]])

    def transform_to_world(self, local_xy) -> np.ndarray:
        """Map a point from this pose's frame into the world frame."""
        return self.rotation() @ np.asarray(local_xy, dtype=float) + self.position()

    def transform_to_local(self, world_xy) -> np.ndarray:
        """Map a world point into this pose's frame."""
        return self.rotation().T @ (np.asarray(world_xy, dtype=float) - self.position())


def quat_normalize(q) -> tuple[float, float, float, float]:
    w, x, y, z = (float(v) for v in q)
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n == 0.0:
        raise ValueError("zero-norm quaternion")
    return (w / n, x / n, y / n, z / n)


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(rot: np.ndarray) -> tuple[float, float, float, float]:
    """Unit quaternion (w, x, y, z) for a rotation matrix; w kept >= 0."""
    m = np.asarray(rot, dtype=float)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2
        w = 0.25 * s
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        w = (m[2, 1] - m[1, 2]) / s
        x = 0.25 * s
        y = (m[0, 1] + m[1, 0]) / s
        z = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        w = (m[0, 2] - m[2, 0]) / s
        x = (m[0, 1] + m[1, 0]) / s
        y = 0.25 * s
        z = (m[1, 2] + m[2, 1]) / s
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        w = (m[1, 0] - m[0, 1]) / s
        x = (m[0, 2] + m[2, 0]) / s
        y = (m[1, 2] + m[2, 1]) / s
        z = 0.25 * s
    if w < 0:
        w, x, y, z = -w, -x, -y, -z
    return quat_normalize((w, x, y, z))


@dataclass(frozen=True)
class Pose3D:
    """Rigid pose: position in meters plus a unit quaternion (w, x, y, z)."""

    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3:
            raise ValueError("position must have 3 components")
        quat = tuple(float(v) for v in self.orientation)
        if len(quat) != 4:
            raise ValueError("orientation must be a quaternion (w, x, y, z)")
        norm = math.sqrt(sum(v * v for v in quat))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"quaternion norm {norm!r} deviates from 1 by more than 1e-9")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", quat)

    @classmethod
    def from_matrix(cls, rot: np.ndarray, position) -> "Pose3D":
        return cls(tuple(float(v) for v in position), quat_from_matrix(rot))

    def matrix(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)

    def position_array(self) -> np.ndarray:
        return np.array(self.position, dtype=float)

    def transform_points(self, points: np.ndarray) -> np.ndarray:
        """Map (N, 3) points from this pose's frame into the parent frame."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return pts @ self.matrix().T + self.position_array()

    def inverse_transform_points(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (pts - self.position_array()) @ self.matrix()

    def compose(self, other: "Pose3D") -> "Pose3D":
        """This pose followed by `other` expressed in this pose's frame."""
        rot = self.matrix() @ other.matrix()
        pos = self.matrix() @ other.position_array() + self.position_array()
        return Pose3D.from_matrix(rot, pos)


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
