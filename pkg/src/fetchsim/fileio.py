"""Text file formats for clouds, RoIs, and sampled trajectories.

All formats are whitespace-separated values, one record per line; blank
lines and '#' comments are ignored.

* point cloud:    x y z                      (meters, camera frame)
* RoI list:       x y w h label confidence   (pixels)
* base trajectory: t x y theta vx vy omega
* arm trajectory:  t q1 q2 q3 q4 q5 q6 q7
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .arm_planner import ArmTrajectory
from .base_planner import BaseSample, BaseTrajectory
from .geometry import Pose2D
from .perception import PointCloud, Roi2D


def _data_lines(path) -> list[list[str]]:
    lines = []
    for raw in Path(path).read_text().splitlines():
        text = raw.split("#", 1)[0].strip()
        if text:
            lines.append(text.split())
    return lines


def load_point_cloud(path) -> PointCloud:
    rows = []
    for i, fields in enumerate(_data_lines(path)):
        if len(fields) != 3:
            raise ValueError(f"{path}: point line {i + 1} needs 3 values")
        rows.append([float(v) for v in fields])
    return PointCloud(np.array(rows) if rows else np.empty((0, 3)))


def save_point_cloud(cloud: PointCloud, path) -> None:
    lines = [f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g}" for p in cloud.points]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def load_rois(path) -> list[Roi2D]:
    rois = []
    for i, fields in enumerate(_data_lines(path)):
        if len(fields) != 6:
            raise ValueError(f"{path}: RoI line {i + 1} needs 6 values")
        x, y, w, h = (float(v) for v in fields[:4])
        rois.append(Roi2D(x=x, y=y, w=w, h=h, label=fields[4], confidence=float(fields[5])))
    return rois


def save_rois(rois, path) -> None:
    lines = [
        f"{r.x:.9g} {r.y:.9g} {r.w:.9g} {r.h:.9g} {r.label} {r.confidence:.9g}"
        for r in rois
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def save_base_trajectory(traj: BaseTrajectory, path) -> None:
    lines = []
    for s in traj.samples:
        vx, vy, omega = s.velocity
        lines.append(
            f"{s.t:.9g} {s.pose.x:.9g} {s.pose.y:.9g} {s.pose.theta:.9g} "
            f"{vx:.9g} {vy:.9g} {omega:.9g}"
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def load_base_trajectory(path) -> BaseTrajectory:
    samples = []
    for i, fields in enumerate(_data_lines(path)):
        if len(fields) != 7:
            raise ValueError(f"{path}: trajectory line {i + 1} needs 7 values")
        t, x, y, theta, vx, vy, omega = (float(v) for v in fields)
        samples.append(BaseSample(t=t, pose=Pose2D(x, y, theta), velocity=(vx, vy, omega)))
    return BaseTrajectory(tuple(samples))


def load_planar_track(path) -> np.ndarray:
    """(N, 3) array of (t, x, y) from a base-trajectory-format file."""
    traj = load_base_trajectory(path)
    return np.array([[s.t, s.pose.x, s.pose.y] for s in traj.samples])


def save_arm_trajectory(traj: ArmTrajectory, path) -> None:
    lines = []
    for t, q in zip(traj.times, traj.positions):
        joints = " ".join(f"{v:.9g}" for v in q)
        lines.append(f"{t:.9g} {joints}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def load_arm_trajectory(path) -> ArmTrajectory:
    times, rows = [], []
    for i, fields in enumerate(_data_lines(path)):
        if len(fields) != 8:
            raise ValueError(f"{path}: arm trajectory line {i + 1} needs 8 values")
        times.append(float(fields[0]))
        rows.append([float(v) for v in fields[1:]])
    return ArmTrajectory(np.array(times), np.array(rows))
