"""fetchsim: deterministic simulator of a drink-fetching mobile manipulator.

Geometric 3D object detection from synthetic depth clouds, base and 7-DOF
arm trajectory planning, a seven-state task machine, and the evaluation
metrics used to quantify each stage - all reproducible from (config, seed).
"""

from .geometry import Pose2D, Pose3D, normalize_angle
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
from .config import (
    ConfigError,
    ConfigValidationError,
    default_config_path,
    load_config,
    load_default_config,
    save_config,
)
from .perception import (
    Box3D,
    PerceptionParams,
    Plane,
    PointCloud,
    Rect2D,
    Roi2D,
    detect_objects_2d_sim,
    estimate_box,
    euclidean_cluster,
    extract_roi_points,
    extrude_box,
    filter_range,
    fit_min_area_rect,
    project_to_plane,
    segment_floor_plane,
)
from .base_planner import (
    ApproachCommand,
    BaseTrajectory,
    approach_controller,
    arrival_offset_pose,
    plan_base_trajectory,
    scale_lateral_velocity,
)
from .kinematics import (
    ArmModel,
    JointLimitError,
    UnreachableTargetError,
    forward_kinematics,
    inverse_kinematics,
    swivel_angle,
)
from .arm_planner import (
    ArmTrajectory,
    plan_arm_sampling_baseline,
    plan_arm_trajectory,
    select_arm,
    verify_collision_free,
)
from .metrics import (
    EePath,
    TrajectoryPair,
    deviation_avg,
    deviation_max,
    path_length_manhattan,
    smoothness_cost,
    summarize_success,
)
from .fsm import (
    Command,
    CommandKind,
    EventType,
    FsmEvent,
    FsmState,
    IllegalTransitionError,
    ServiceDone,
    ServiceFailed,
    step_fsm,
)
from .executor import EpisodeResult, default_grasp_scenario, run_service
from .simulate import simulate_localization, synthesize_cloud
from .harness import EpisodeReport, emit_report, parse_report, run_trials

__version__ = "0.1.0"
