"""7-DOF anthropomorphic arm kinematics with closed-form inverse solutions.

Chain layout in the shoulder frame (x forward along the extended arm):

* q1, q2, q3 - spherical shoulder as Rz(q1) Ry(q2) Rx(q3)
* q4         - elbow hinge about the local y axis, bending the forearm down
* q5, q6, q7 - spherical wrist as Rx(q5) Ry(q6) Rx(q7)

Link lengths are (upper arm, forearm, wrist-to-tool); at q = 0 the tool sits
at (reach, 0, 0).  The inverse solution fixes the elbow self-motion circle
with an explicit swivel angle, measured around the shoulder-to-wrist axis
from the +z reference (swivel 0 raises the elbow; the home configuration
has swivel 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose3D, normalize_angle, rot_x, rot_y, rot_z
from .model import RobotConfig


class UnreachableTargetError(ValueError):
    """Target outside the reachable annulus of the arm."""


class JointLimitError(ValueError):
    """A kinematic solution exists but violates joint limits."""


@dataclass(frozen=True)
class ArmModel:
    """Geometry shared by both arms plus per-side shoulder mounts."""

    link_lengths: tuple[float, float, float]
    shoulder_mounts: dict[str, Pose3D] = field(compare=False)
    joint_limits: tuple[tuple[float, float], ...] = ()
    joint_vel_limits: tuple[float, ...] = ()

    def __post_init__(self):
        if any(l <= 0 for l in self.link_lengths):
            raise ValueError("link lengths must be positive")

    @property
    def reach(self) -> float:
        return sum(self.link_lengths)

    @classmethod
    def from_config(cls, cfg: RobotConfig) -> "ArmModel":
        mounts = {
            side: Pose3D((0.0, sign * cfg.shoulder_offset, cfg.shoulder_height))
            for side, sign in (("right", 1.0), ("left", -1.0))
        }
        return cls(
            link_lengths=cfg.link_lengths,
            shoulder_mounts=mounts,
            joint_limits=cfg.joint_limits,
            joint_vel_limits=cfg.joint_vel_limits,
        )

    def check_limits(self, q) -> list[int]:
        """Indices of joints outside their limits (1e-9 slack)."""
        bad = []
        for j, (value, (lo, hi)) in enumerate(zip(q, self.joint_limits)):
            if value < lo - 1e-9 or value > hi + 1e-9:
                bad.append(j)
        return bad


def _chain_matrices(model: ArmModel, q) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    q = np.asarray(q, dtype=float)
    r1 = rot_z(q[0]) @ rot_y(q[1]) @ rot_x(q[2])
    r2 = r1 @ rot_y(q[3])
    r_tool = r2 @ rot_x(q[4]) @ rot_y(q[5]) @ rot_x(q[6])
    return r1, r2, r_tool


def arm_joint_positions(model: ArmModel, q) -> np.ndarray:
    """Shoulder-frame positions of (shoulder, elbow, wrist, tool)."""
    l1, l2, l3 = model.link_lengths
    r1, r2, r_tool = _chain_matrices(model, q)
    shoulder = np.zeros(3)
    elbow = r1 @ np.array([l1, 0.0, 0.0])
    wrist = elbow + r2 @ np.array([l2, 0.0, 0.0])
    tool = wrist + r_tool @ np.array([l3, 0.0, 0.0])
    return np.vstack([shoulder, elbow, wrist, tool])


def forward_kinematics(model: ArmModel, q) -> Pose3D:
    """Tool pose in the shoulder frame."""
    q = np.asarray(q, dtype=float)
    if q.shape != (7,):
        raise ValueError("expected 7 joint values")
    if not np.isfinite(q).all():
        raise ValueError("joint values must be finite")
    positions = arm_joint_positions(model, q)
    _, _, r_tool = _chain_matrices(model, q)
    return Pose3D.from_matrix(r_tool, positions[3])


def _elbow_circle(model: ArmModel, wrist: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, float, float]:
    """Center parameters and reference basis of the elbow self-motion circle."""
    l1, l2, _ = model.link_lengths
    d = float(np.linalg.norm(wrist))
    w_hat = wrist / d
    beta = (l1 * l1 + d * d - l2 * l2) / (2.0 * d)
    rho_sq = l1 * l1 - beta * beta
    rho = math.sqrt(rho_sq) if rho_sq > 0.0 else 0.0
    ref = np.array([0.0, 0.0, 1.0])
    if abs(ref @ w_hat) > 0.999:
        ref = np.array([1.0, 0.0, 0.0])
    u0 = ref - (ref @ w_hat) * w_hat
    u0 /= np.linalg.norm(u0)
    v0 = np.cross(w_hat, u0)
    return w_hat, u0, v0, beta, rho


def _euler_zyx(r: np.ndarray) -> list[tuple[float, float, float]]:
    """Both (a, b, c) solutions with r = Rz(a) Ry(b) Rx(c), canonical first."""
    sy = -r[2, 0]
    sy = min(max(sy, -1.0), 1.0)
    b = math.asin(sy)
    if abs(abs(sy) - 1.0) < 1e-12:
        # Gimbal: fold the lost DOF into a.
        return [(math.atan2(-r[0, 1], r[1, 1]), b, 0.0)]
    a = math.atan2(r[1, 0], r[0, 0])
    c = math.atan2(r[2, 1], r[2, 2])
    return [
        (a, b, c),
        (normalize_angle(a + math.pi), normalize_angle(math.pi - b),
         normalize_angle(c + math.pi)),
    ]


def _euler_xyx(r: np.ndarray) -> list[tuple[float, float, float]]:
    """Both (a, b, c) solutions with r = Rx(a) Ry(b) Rx(c)."""
    cb = min(max(r[0, 0], -1.0), 1.0)
    sb = math.hypot(r[0, 1], r[0, 2])
    if sb < 1e-12:
        if cb > 0:
            return [(math.atan2(r[2, 1], r[1, 1]), 0.0, 0.0)]
        return [(math.atan2(r[2, 1], r[1, 1]), math.pi, 0.0)]
    b = math.atan2(sb, cb)
    a = math.atan2(r[1, 0], -r[2, 0])
    c = math.atan2(r[0, 1], r[0, 2])
    return [
        (a, b, c),
        (normalize_angle(a + math.pi), -b, normalize_angle(c + math.pi)),
    ]


def inverse_kinematics(model: ArmModel, target: Pose3D, swivel: float = 0.0) -> np.ndarray:
    """Closed-form joint solution for a shoulder-frame tool pose.

    The elbow self-motion is pinned at `swivel`; among the two wrist
    branches the first within joint limits wins (primary branch first).
    Raises UnreachableTargetError outside the reach annulus and
    JointLimitError when every branch violates a limit.
    """
    l1, l2, l3 = model.link_lengths
    r_t = target.matrix()
    p_t = target.position_array()
    wrist = p_t - r_t @ np.array([l3, 0.0, 0.0])
    d = float(np.linalg.norm(wrist))
    if d > l1 + l2 + 1e-9:
        raise UnreachableTargetError(
            f"wrist center at {d:.3f} m exceeds max {l1 + l2:.3f} m"
        )
    if d < abs(l1 - l2) - 1e-9 or d < 1e-9:
        raise UnreachableTargetError(
            f"wrist center at {d:.3f} m is inside the inner annulus"
        )

    cos_elbow = (d * d - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    cos_elbow = min(max(cos_elbow, -1.0), 1.0)
    q4 = math.acos(cos_elbow)

    w_hat, u0, v0, beta, rho = _elbow_circle(model, wrist)
    m_hat = math.cos(swivel) * u0 + math.sin(swivel) * v0
    elbow = beta * w_hat + rho * m_hat
    e_hat = elbow / l1
    if math.sin(q4) > 1e-9:
        f_hat = (wrist - elbow) / l2
        z1 = (math.cos(q4) * e_hat - f_hat) / math.sin(q4)
    else:
        z1 = m_hat  # straight arm: the swivel fixes the roll directly
    y1 = np.cross(z1, e_hat)
    r1 = np.column_stack([e_hat, y1, z1])
    r4 = r1 @ rot_y(q4)
    wrist_rot = r4.T @ r_t
    wrist_branches = _euler_xyx(wrist_rot)
    violations: list[str] = []
    for q1, q2, q3 in _euler_zyx(r1):
        for a, b, c in wrist_branches:
            q = np.array([q1, q2, q3, q4, a, b, c])
            q = np.array([normalize_angle(v) for v in q])
            bad = model.check_limits(q)
            if not bad:
                return q
            violations.append("joints " + ",".join(str(j + 1) for j in bad))
    raise JointLimitError(
        f"all solution branches violate joint limits ({'; '.join(violations)})"
    )


def swivel_angle(model: ArmModel, q) -> float:
    """Swivel of a configuration: elbow angle around the shoulder-wrist axis."""
    positions = arm_joint_positions(model, q)
    elbow, wrist = positions[1], positions[2]
    w_hat, u0, v0, beta, rho = _elbow_circle(model, wrist)
    radial = elbow - beta * w_hat
    if np.linalg.norm(radial) < 1e-9:
        # Straight arm: recover the roll plane from the shoulder z axis.
        r1, _, _ = _chain_matrices(model, q)
        radial = r1 @ np.array([0.0, 0.0, 1.0])
    return math.atan2(radial @ v0, radial @ u0)


def shoulder_to_base(model: ArmModel, side: str, pose: Pose3D) -> Pose3D:
    """Shoulder-frame pose -> base frame for the given arm."""
    return model.shoulder_mounts[side].compose(pose)


def base_to_shoulder(model: ArmModel, side: str, pose: Pose3D) -> Pose3D:
    mount = model.shoulder_mounts[side]
    rot = mount.matrix().T @ pose.matrix()
    pos = mount.matrix().T @ (pose.position_array() - mount.position_array())
    return Pose3D.from_matrix(rot, pos)
