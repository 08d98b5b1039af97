"""Episode execution: drives the task FSM against the simulated robot.

The executor owns the world model and the simulated clock.  It resolves
symbolic command targets, runs each command block sequentially (so at most
one command is ever in flight), advances simulated time in control ticks,
and converts primitive results into FSM flag events.  Every trace it
produces is a pure function of (world, config, noise, request, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arm_planner import (
    ArmTrajectory,
    ee_path_positions,
    plan_arm_trajectory,
    select_arm,
)
from .base_planner import (
    approach_controller,
    arrival_offset_pose,
    plan_base_trajectory,
    shoulder_lateral_offset,
)
from .fsm import (
    Command,
    CommandKind,
    EventType,
    FsmEvent,
    FsmState,
    Outcome,
    ServiceDone,
    ServiceFailed,
    step_fsm,
)
from .geometry import Pose2D, Pose3D, normalize_angle, rot_y
from .kinematics import ArmModel, base_to_shoulder
from .metrics import (
    EePath,
    TrajectoryPair,
    deviation_avg,
    deviation_max,
    path_length_manhattan,
    smoothness_cost,
)
from .model import CameraModel, NoiseModel, RobotConfig, WorldModel, default_camera
from .perception import (
    PerceptionParams,
    camera_to_base,
    detect_objects_2d_sim,
    estimate_box,
)
from .simulate import DEFAULT_CLOUD_DENSITY, simulate_localization, synthesize_cloud

TRACKING_PERIOD_TICKS = 20
APPROACH_TIMEOUT = 60.0
APPROACH_STOP_TOLERANCE = 0.005
GRASP_ERROR_TOLERANCE = 0.02
SERVE_TABLE_NAME = "serving_table"


def derive_seed(*keys) -> int:
    """Stable child seed from a tuple of integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


def facing_nearest_wall(xy, world: WorldModel) -> float:
    """Approach heading that faces the room wall nearest to a point."""
    x, y = float(xy[0]), float(xy[1])
    width, depth = world.room_extent
    options = (
        (width - x, 0.0),          # east wall -> face +x
        (x, math.pi),              # west wall -> face -x
        (depth - y, math.pi / 2),  # north wall -> face +y
        (y, -math.pi / 2),         # south wall -> face -y
    )
    return min(options, key=lambda o: o[0])[1]


@dataclass
class EpisodeResult:
    outcome: str
    request: str
    seed: int
    total_time: float
    log: list[str]
    state_durations: dict[str, float]
    state_attempts: dict[str, tuple[int, int]]
    manhattan_length: float | None = None
    smoothness: float | None = None
    deviation_max: float | None = None
    deviation_avg: float | None = None

    @property
    def succeeded(self) -> bool:
        return self.outcome == "ServiceDone"


@dataclass
class _Sim:
    """Mutable episode state shared by the command primitives."""

    world: WorldModel
    cfg: RobotConfig
    noise: NoiseModel
    camera: CameraModel
    request: str
    seed: int
    clock: float = 0.0
    base: Pose2D = None
    arm: str = "right"
    approach_theta: float = 0.0
    estimated_center: np.ndarray | None = None
    detected_box: object = None
    loc_index: int = 0
    truth_track: list[tuple[float, float, float]] = field(default_factory=list)
    est_track: list[tuple[float, float, float]] = field(default_factory=list)
    grasp_traj: ArmTrajectory | None = None
    log: list[str] = field(default_factory=list)
    state_name: str = FsmState.WAIT_REQUEST.value

    def note(self, text: str) -> None:
        self.log.append(f"{self.clock:.3f} {self.state_name} {text}")

    def record_localization(self, omega: float) -> None:
        est = simulate_localization(
            self.base, omega, self.noise.localization_mode, self.noise,
            derive_seed(self.seed, 900), self.loc_index,
        )
        self.loc_index += 1
        self.truth_track.append((self.clock, self.base.x, self.base.y))
        self.est_track.append((self.clock, est.x, est.y))


def _run_base_motion(sim: _Sim, goal: Pose2D) -> FsmEvent:
    dist = math.hypot(goal.x - sim.base.x, goal.y - sim.base.y)
    if dist < 1e-9:
        sim.base = goal
        return FsmEvent(EventType.MOTION_DONE)
    try:
        traj = plan_base_trajectory(sim.base, goal, sim.cfg)
    except ValueError as exc:
        sim.note(f"base-plan-error {exc}")
        return FsmEvent(EventType.MOTION_FAILED)
    start = sim.clock
    for sample in traj.samples[1:]:
        sim.clock = start + sample.t
        sim.base = sample.pose
        sim.record_localization(sample.velocity[2])
    return FsmEvent(EventType.MOTION_DONE)


def _object_prior(sim: _Sim) -> np.ndarray:
    obj = sim.world.find_object(sim.request)
    return obj.center()


def _track_object(sim: _Sim, step: int) -> np.ndarray | None:
    """One simulated tracking frame: 2D detection triangulated at known height."""
    rois = detect_objects_2d_sim(
        sim.world, sim.base, sim.camera, sim.noise,
        derive_seed(sim.seed, 100, step),
    )
    roi = next((r for r in rois if r.label == sim.request), None)
    if roi is None:
        return None
    obj = sim.world.find_object(sim.request)
    center_z = obj.center()[2]
    # Intersect the RoI-center ray with the object's mid-height plane.
    ray_cam = sim.camera.pixel_ray(roi.x + roi.w / 2.0, roi.y + roi.h / 2.0)
    rot2 = sim.base.rotation()
    base3 = np.eye(3)
    base3[:2, :2] = rot2
    cam_rot = base3 @ sim.camera.mount_pose.matrix()
    mount = sim.camera.mount_pose.position_array()
    cam_origin = np.array([*(rot2 @ mount[:2] + sim.base.position()), mount[2]])
    ray_world = cam_rot @ ray_cam
    if abs(ray_world[2]) < 1e-9:
        return None
    t = (center_z - cam_origin[2]) / ray_world[2]
    if t <= 0:
        return None
    hit = cam_origin + t * ray_world
    return np.array([hit[0], hit[1], center_z])


def _run_approach(sim: _Sim) -> FsmEvent:
    cfg = sim.cfg
    theta = sim.approach_theta
    estimate = sim.estimated_center if sim.estimated_center is not None else _object_prior(sim)
    arm_offset = shoulder_lateral_offset(sim.arm, cfg)
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    start = sim.clock
    step = 0
    while sim.clock - start < APPROACH_TIMEOUT:
        if step % TRACKING_PERIOD_TICKS == 0:
            seen = _track_object(sim, step)
            if seen is not None:
                estimate = seen
        # Approach frame: origin at the estimated object, +x along theta.
        rel = rot.T @ (sim.base.position() - estimate[:2])
        robot_in_approach = Pose2D(rel[0], rel[1], normalize_angle(sim.base.theta - theta))
        object_y_robot = -rel[1]
        remaining = -cfg.grasp_standoff - rel[0]
        if remaining <= APPROACH_STOP_TOLERANCE:
            sim.estimated_center = estimate
            return FsmEvent(EventType.MOTION_DONE)
        cmd = approach_controller(
            robot_in_approach, object_y_robot, cfg.approach_limits, arm_offset, cfg
        )
        world_v = rot @ np.array([cmd.v_forward, cmd.v_lateral])
        sim.base = Pose2D(
            sim.base.x + world_v[0] * cfg.control_tick,
            sim.base.y + world_v[1] * cfg.control_tick,
            sim.base.theta,
        )
        sim.clock += cfg.control_tick
        sim.record_localization(0.0)
        step += 1
    sim.note("approach-timeout")
    return FsmEvent(EventType.MOTION_FAILED)


def _run_detection(sim: _Sim) -> FsmEvent:
    sim.clock += sim.cfg.detection_latency
    cloud = synthesize_cloud(
        sim.world, sim.base, sim.camera, DEFAULT_CLOUD_DENSITY, sim.noise,
        derive_seed(sim.seed, 200),
    )
    rois = detect_objects_2d_sim(
        sim.world, sim.base, sim.camera, sim.noise, derive_seed(sim.seed, 201)
    )
    roi = next((r for r in rois if r.label == sim.request), None)
    if roi is None:
        sim.note("detection-miss")
        return FsmEvent(EventType.DETECTION_FAILED)
    obj = sim.world.find_object(sim.request)
    try:
        box = estimate_box(
            cloud, roi, sim.camera, obj.height, PerceptionParams(),
            derive_seed(sim.seed, 202),
        )
    except (ValueError, RuntimeError) as exc:
        sim.note(f"box-fit-error {exc}")
        return FsmEvent(EventType.DETECTION_FAILED)
    center_base = camera_to_base(box.center[None, :], sim.camera)[0]
    rot2 = sim.base.rotation()
    center_world = np.array(
        [*(rot2 @ center_base[:2] + sim.base.position()), center_base[2]]
    )
    sim.detected_box = box
    sim.estimated_center = center_world
    return FsmEvent(EventType.DETECTION_SUCCEEDED, payload=box)


def _tool_pose_base(xyz, pitch: float) -> Pose3D:
    """Tool pose in the base frame: approach axis pitched down by `pitch`."""
    return Pose3D.from_matrix(rot_y(pitch), tuple(float(v) for v in xyz))


def _grasp_target_base(sim: _Sim) -> Pose3D:
    rot2 = sim.base.rotation()
    rel = rot2.T @ (sim.estimated_center[:2] - sim.base.position())
    return _tool_pose_base(
        (rel[0], rel[1], sim.estimated_center[2]), sim.cfg.grasp_pitch
    )


def _run_plan_arm(sim: _Sim, target) -> FsmEvent | None:
    cfg = sim.cfg
    model = ArmModel.from_config(cfg)
    if isinstance(target, str) and target == "place":
        place_xy, place_z = _place_point(sim)
        rot2 = sim.base.rotation()
        rel = rot2.T @ (place_xy - sim.base.position())
        target_base = _tool_pose_base((rel[0], rel[1], place_z), cfg.grasp_pitch)
    else:
        target_base = _grasp_target_base(sim)
    target_shoulder = base_to_shoulder(model, sim.arm, target_base)
    try:
        traj = plan_arm_trajectory(model, cfg.arm_home, target_shoulder, cfg)
    except ValueError as exc:
        sim.note(f"arm-plan-error {exc}")
        return FsmEvent(EventType.MOTION_FAILED)
    sim.clock += traj.duration
    if not isinstance(target, str):
        sim.grasp_traj = traj
    return None


def _place_point(sim: _Sim) -> tuple[np.ndarray, float]:
    for box in sim.world.furniture:
        if box.name == SERVE_TABLE_NAME:
            obj = sim.world.find_object(sim.request)
            xy = np.array([(box.x_min + box.x_max) / 2.0, (box.y_min + box.y_max) / 2.0])
            return xy, box.height + obj.height / 2.0
    raise KeyError(f"world has no furniture named '{SERVE_TABLE_NAME}'")


def _nearest_arm_at_arrival(object_xy, approach_theta: float, cfg: RobotConfig) -> str:
    """Arm selection from the centerline arrival pose (object dead ahead)."""
    virtual = Pose2D(
        float(object_xy[0]) - cfg.grasp_standoff * math.cos(approach_theta),
        float(object_xy[1]) - cfg.grasp_standoff * math.sin(approach_theta),
        approach_theta,
    )
    return select_arm(object_xy, virtual)


def _grasp_error(sim: _Sim) -> float:
    truth = sim.world.find_object(sim.request).center()
    if sim.estimated_center is None:
        return math.inf
    return float(np.linalg.norm(sim.estimated_center - truth))


def _execute_block(sim: _Sim, commands: list[Command]) -> FsmEvent:
    """Run a command block in order; the block's terminal event drives the FSM."""
    cfg = sim.cfg
    for command in commands:
        sim.note(f"cmd {command.kind.value}")
        if command.kind is CommandKind.PLAN_BASE:
            kind, label = command.target
            if kind == "shelf":
                obj = sim.world.find_object(label)
                center = obj.center()
                sim.approach_theta = facing_nearest_wall(center[:2], sim.world)
                sim.arm = _nearest_arm_at_arrival(center[:2], sim.approach_theta, cfg)
                arrival = arrival_offset_pose(
                    center[:2], sim.arm, cfg, sim.approach_theta
                )
                back = cfg.approach_start_distance
                goal = Pose2D(
                    arrival.x - back * math.cos(sim.approach_theta),
                    arrival.y - back * math.sin(sim.approach_theta),
                    sim.approach_theta,
                )
            else:
                place_xy, _ = _place_point(sim)
                theta = facing_nearest_wall(place_xy, sim.world)
                sim.arm = _nearest_arm_at_arrival(place_xy, theta, cfg)
                sim.approach_theta = theta
                goal = arrival_offset_pose(place_xy, sim.arm, cfg, theta)
            event = _run_base_motion(sim, goal)
            if event.type is EventType.MOTION_FAILED:
                return event
            last = event
        elif command.kind is CommandKind.APPROACH:
            event = _run_approach(sim)
            if event.type is EventType.MOTION_FAILED:
                return event
            last = event
        elif command.kind is CommandKind.REQUEST_DETECTION:
            last = _run_detection(sim)
        elif command.kind is CommandKind.PLAN_ARM:
            failure = _run_plan_arm(sim, command.target)
            if failure is not None:
                return failure
            last = FsmEvent(EventType.MOTION_DONE)
        elif command.kind is CommandKind.CLOSE_GRIPPER:
            sim.clock += cfg.grasp_duration
            ok = _grasp_error(sim) <= GRASP_ERROR_TOLERANCE
            last = FsmEvent(
                EventType.GRASP_CONFIRMED if ok else EventType.GRASP_FAILED
            )
        elif command.kind is CommandKind.OPEN_GRIPPER:
            sim.clock += cfg.place_duration
            ok = _grasp_error(sim) <= GRASP_ERROR_TOLERANCE
            last = FsmEvent(
                EventType.PLACE_CONFIRMED if ok else EventType.PLACE_FAILED
            )
        elif command.kind is CommandKind.REQUEST_RELOCALIZE:
            sim.clock += cfg.relocalize_duration
            est = simulate_localization(
                sim.base, 0.0, sim.noise.localization_mode, sim.noise,
                derive_seed(sim.seed, 901), sim.loc_index,
            )
            sim.loc_index += 1
            err = math.hypot(est.x - sim.base.x, est.y - sim.base.y)
            ok = err <= cfg.relocalize_tolerance
            last = FsmEvent(
                EventType.RELOCALIZE_CONVERGED if ok else EventType.RELOCALIZE_FAILED
            )
        else:  # pragma: no cover - exhaustive over CommandKind
            raise RuntimeError(f"unhandled command {command.kind}")
    return last


def run_service(
    world: WorldModel,
    cfg: RobotConfig,
    noise: NoiseModel,
    request: str,
    seed: int,
    camera: CameraModel | None = None,
) -> EpisodeResult:
    """Simulate one full fetch-and-serve episode.

    Returns the episode record: outcome, per-state durations and
    attempt/success counts, the event log, and trajectory metrics.
    Failures are outcomes, never exceptions.
    """
    world.find_object(request)  # unknown labels are a caller error
    if camera is None:
        camera = default_camera()
    sim = _Sim(
        world=world, cfg=cfg, noise=noise, camera=camera,
        request=request, seed=seed, base=world.robot_start,
    )

    state: FsmState | Outcome = FsmState.WAIT_REQUEST
    event = FsmEvent(EventType.REQUEST_RECEIVED, payload=request)
    entered_at = {FsmState.WAIT_REQUEST.value: 0.0}
    durations: dict[str, float] = {}
    attempts: dict[str, tuple[int, int]] = {FsmState.WAIT_REQUEST.value: (1, 0)}

    while True:
        sim.state_name = state.value
        sim.note(f"event {event.type.value}")
        nxt, commands = step_fsm(state, event)
        if isinstance(nxt, (ServiceDone, ServiceFailed)):
            durations[state.value] = sim.clock - entered_at[state.value]
            if isinstance(nxt, ServiceDone):
                a, _ = attempts[state.value]
                attempts[state.value] = (a, a)
                outcome = "ServiceDone"
            else:
                outcome = f"ServiceFailed({nxt.state.value})"
            sim.note(f"outcome {outcome}")
            break
        # Successful exit from the previous state.
        durations[state.value] = sim.clock - entered_at[state.value]
        a, _ = attempts[state.value]
        attempts[state.value] = (a, a)
        state = nxt
        entered_at[state.value] = sim.clock
        prev = attempts.get(state.value, (0, 0))
        attempts[state.value] = (prev[0] + 1, prev[1])
        sim.state_name = state.value
        event = _execute_block(sim, commands)

    result = EpisodeResult(
        outcome=outcome,
        request=request,
        seed=seed,
        total_time=sim.clock,
        log=sim.log,
        state_durations=durations,
        state_attempts=attempts,
    )
    if sim.grasp_traj is not None and len(sim.grasp_traj) > 1:
        model = ArmModel.from_config(cfg)
        path = EePath(sim.grasp_traj.times, ee_path_positions(model, sim.grasp_traj))
        result.manhattan_length = path_length_manhattan(path)
        result.smoothness = smoothness_cost(path)
    if sim.est_track:
        pair = TrajectoryPair.align(
            np.array(sim.est_track), np.array(sim.truth_track), cfg.control_tick
        )
        if len(pair):
            result.deviation_max = deviation_max(pair)
            result.deviation_avg = deviation_avg(pair)
    return result


def default_grasp_scenario(
    world: WorldModel, cfg: RobotConfig, label: str = "cola"
) -> tuple[ArmModel, np.ndarray, Pose3D, Pose2D, str]:
    """Canonical noise-free grasp query used by the planner benchmarks.

    Returns (arm model, start configuration, shoulder-frame target pose,
    base pose at arrival, arm side) for grasping `label` at its true pose.
    """
    model = ArmModel.from_config(cfg)
    obj = world.find_object(label)
    center = obj.center()
    theta = facing_nearest_wall(center[:2], world)
    arm = _nearest_arm_at_arrival(center[:2], theta, cfg)
    base = arrival_offset_pose(center[:2], arm, cfg, theta)
    rot2 = base.rotation()
    rel = rot2.T @ (center[:2] - base.position())
    target_base = _tool_pose_base((rel[0], rel[1], center[2]), cfg.grasp_pitch)
    target = base_to_shoulder(model, arm, target_base)
    return model, np.array(cfg.arm_home), target, base, arm
